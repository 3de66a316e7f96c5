#include "bookrel/embed.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "bookrel/tsv.hpp"

namespace bookrel {

bool EmbeddingTable::set(std::string word, std::span<const float> vector) {
  if (vector.size() != dimension_) {
    throw ValidationError("embedding for '" + word + "' has dimension " +
                          std::to_string(vector.size()) + ", expected " + std::to_string(dimension_));
  }
  auto it = index_.find(word);
  if (it != index_.end()) {
    std::copy(vector.begin(), vector.end(),
              data_.begin() + static_cast<std::ptrdiff_t>(it->second * dimension_));
    return false;
  }
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  data_.insert(data_.end(), vector.begin(), vector.end());
  return true;
}

std::span<const float> EmbeddingTable::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return {};
  return std::span<const float>(data_).subspan(it->second * dimension_, dimension_);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, EmbeddingLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  EmbeddingTable table;
  bool first = true;
  std::size_t duplicates = 0;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ' ');
    values.clear();
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) continue;
      float v = 0.0F;
      const auto* begin = fields[i].data();
      const auto* end = begin + fields[i].size();
      const auto res = std::from_chars(begin, end, v);
      if (res.ec != std::errc{} || res.ptr != end) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                         fields[i] + "'");
      }
      values.push_back(v);
    }
    if (values.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": no vector values");
    }
    if (first) {
      table = EmbeddingTable(values.size());
      first = false;
    } else if (values.size() != table.dimension()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": dimension " +
                       std::to_string(values.size()) + " differs from " +
                       std::to_string(table.dimension()));
    }
    if (!table.set(fields[0], values)) {
      ++duplicates;
      std::cerr << "warning: " << path.string() << ":" << line_no << ": duplicate word '"
                << fields[0] << "', keeping the last vector\n";
    }
  }
  if (first) throw ParseError(path.string() + ": empty embedding file");
  if (stats) stats->duplicates = duplicates;
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ostringstream out;
  char buf[32];
  for (const auto& w : table.words()) {
    out << w;
    for (float v : table.lookup(w)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<Chunk> chunk_book(const Book& book, std::size_t chunk_size) {
  if (chunk_size == 0) throw ValidationError("chunk_size must be >= 1");
  std::vector<Chunk> chunks;
  std::map<std::string, std::uint64_t> acc;
  std::uint64_t words = 0;
  auto flush = [&] {
    Chunk c;
    c.ordinal = chunks.size();
    c.word_count = words;
    c.tokens.reserve(acc.size());
    for (auto& [tok, n] : acc) c.tokens.push_back({tok, static_cast<std::uint32_t>(n)});
    chunks.push_back(std::move(c));
    acc.clear();
    words = 0;
  };
  for (const auto& page : book.pages) {
    for (const auto& tc : page.tokens()) acc[tc.token] += tc.count;
    words += page.word_count();
    if (words >= chunk_size) flush();
  }
  if (words > 0) flush();
  return chunks;
}

ChunkVector chunk_vector(const Chunk& chunk, const EmbeddingTable& table) {
  ChunkVector out;
  out.ordinal = chunk.ordinal;
  out.vector.assign(table.dimension(), 0.0);
  for (const auto& tc : chunk.tokens) {
    const auto v = table.lookup(tc.token);
    if (v.empty()) continue;
    const double n = tc.count;
    for (std::size_t k = 0; k < v.size(); ++k) out.vector[k] += n * static_cast<double>(v[k]);
    out.words_embedded += tc.count;
  }
  return out;
}

Vector book_vector(const Book& book, const EmbeddingTable& table) {
  Chunk whole;
  std::map<std::string, std::uint64_t> acc;
  for (const auto& page : book.pages) {
    for (const auto& tc : page.tokens()) acc[tc.token] += tc.count;
  }
  for (auto& [tok, n] : acc) {
    whole.tokens.push_back({tok, static_cast<std::uint32_t>(n)});
    whole.word_count += n;
  }
  return chunk_vector(whole, table).vector;
}

}  // namespace bookrel
