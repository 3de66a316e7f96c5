#include "bookrel/tsv.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <system_error>

namespace bookrel {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::size_t TsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError("missing TSV column '" + std::string(name) + "'");
}

TsvTable read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  TsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw ParseError(path.string() + ": missing header row");
  return table;
}

void write_tsv(const std::filesystem::path& path, const TsvTable& table) {
  std::ostringstream out;
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << '\t';
      out << row[i];
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  write_file_atomic(path, out.str());
}

std::vector<LabeledPair> read_labels(const std::filesystem::path& path) {
  const auto table = read_tsv(path);
  const auto left = table.column("left_id");
  const auto right = table.column("right_id");
  const auto label = table.column("label");
  std::optional<std::size_t> provenance;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == "provenance") provenance = i;
  }
  std::vector<LabeledPair> pairs;
  pairs.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    LabeledPair p;
    p.left_id = row[left];
    p.right_id = row[right];
    p.label = parse_label(row[label]);
    p.provenance = provenance ? parse_provenance(row[*provenance]) : Provenance::Real;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_labels(const std::filesystem::path& path, std::span<const LabeledPair> pairs,
                  bool with_provenance) {
  TsvTable table;
  table.header = {"left_id", "right_id", "label"};
  if (with_provenance) table.header.emplace_back("provenance");
  for (const auto& p : pairs) {
    std::vector<std::string> row = {p.left_id, p.right_id, std::string(to_string(p.label))};
    if (with_provenance) row.emplace_back(to_string(p.provenance));
    table.rows.push_back(std::move(row));
  }
  write_tsv(path, table);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ParseError("invalid number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace bookrel
