#include "bookrel/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include "bookrel/tsv.hpp"

namespace bookrel {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

Page Page::from_counts(std::vector<TokenCount> counts) {
  std::map<std::string, std::uint64_t> merged;
  for (auto& tc : counts) {
    if (tc.count == 0) throw ValidationError("token '" + tc.token + "' has count 0");
    merged[to_lower(tc.token)] += tc.count;
  }
  Page page;
  page.tokens_.reserve(merged.size());
  for (auto& [token, count] : merged) {
    if (count > UINT32_MAX) throw ValidationError("token count overflow for '" + token + "'");
    page.tokens_.push_back({token, static_cast<std::uint32_t>(count)});
    page.word_count_ += count;
  }
  return page;
}

void Book::reindex() {
  for (std::size_t i = 0; i < pages.size(); ++i) pages[i].index = i;
}

void Book::validate() const {
  if (id.empty()) throw ValidationError("book id is empty");
  if (pages.empty()) throw ValidationError("book '" + id + "' has no pages");
  for (std::size_t i = 0; i < pages.size(); ++i) {
    if (pages[i].index != i) {
      throw ValidationError("book '" + id + "': page " + std::to_string(i) + " has index " +
                            std::to_string(pages[i].index));
    }
  }
  if (metadata.work_key && metadata.work_key->empty()) {
    throw ValidationError("book '" + id + "': work_key is present but empty");
  }
}

std::uint64_t book_word_count(const Book& book) {
  std::uint64_t total = 0;
  for (const auto& p : book.pages) total += p.word_count();
  return total;
}

Book book_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("book JSON must be an object");
  Book book;
  if (!j.contains("id") || !j["id"].is_string()) throw ParseError("book JSON: missing string 'id'");
  book.id = j["id"].get<std::string>();
  if (j.contains("metadata")) {
    const auto& m = j["metadata"];
    if (!m.is_object()) throw ParseError("book '" + book.id + "': metadata must be an object");
    auto opt_string = [&](const char* key) -> std::optional<std::string> {
      if (!m.contains(key) || m[key].is_null()) return std::nullopt;
      if (!m[key].is_string()) {
        throw ParseError("book '" + book.id + "': metadata." + key + " must be a string");
      }
      return m[key].get<std::string>();
    };
    book.metadata.title = opt_string("title").value_or("");
    book.metadata.author = opt_string("author").value_or("");
    book.metadata.enumeration_raw = opt_string("enumeration");
    book.metadata.work_key = opt_string("work_key");
  }
  if (!j.contains("pages") || !j["pages"].is_array()) {
    throw ParseError("book '" + book.id + "': missing 'pages' array");
  }
  const auto& pages = j["pages"];
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const auto& pj = pages[i];
    const auto where = "book '" + book.id + "': page " + std::to_string(i);
    if (!pj.is_object() || !pj.contains("tokens") || !pj["tokens"].is_object()) {
      throw ParseError(where + ": expected an object with a 'tokens' object");
    }
    std::vector<TokenCount> counts;
    counts.reserve(pj["tokens"].size());
    for (const auto& [token, count] : pj["tokens"].items()) {
      if (!count.is_number_integer() || count.get<std::int64_t>() < 1 ||
          count.get<std::int64_t>() > UINT32_MAX) {
        throw ParseError(where + ": count for '" + token + "' must be a positive integer");
      }
      counts.push_back({token, count.get<std::uint32_t>()});
    }
    try {
      book.pages.push_back(Page::from_counts(std::move(counts)));
    } catch (const ValidationError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  book.reindex();
  book.validate();
  return book;
}

nlohmann::json book_to_json(const Book& book) {
  nlohmann::json j;
  j["id"] = book.id;
  nlohmann::json m = nlohmann::json::object();
  m["title"] = book.metadata.title;
  m["author"] = book.metadata.author;
  m["enumeration"] = book.metadata.enumeration_raw ? nlohmann::json(*book.metadata.enumeration_raw)
                                                   : nlohmann::json(nullptr);
  m["work_key"] =
      book.metadata.work_key ? nlohmann::json(*book.metadata.work_key) : nlohmann::json(nullptr);
  j["metadata"] = std::move(m);
  auto pages = nlohmann::json::array();
  for (const auto& p : book.pages) {
    nlohmann::json tokens = nlohmann::json::object();
    for (const auto& tc : p.tokens()) tokens[tc.token] = tc.count;
    pages.push_back({{"tokens", std::move(tokens)}});
  }
  j["pages"] = std::move(pages);
  return j;
}

Book load_book(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return book_from_json(j);
}

void save_book(const Book& book, const std::filesystem::path& path) {
  write_file_atomic(path, book_to_json(book).dump() + "\n");
}

std::uint64_t length_percentile(std::vector<std::uint64_t> counts, double q) {
  if (counts.empty()) throw ValidationError("length_percentile: empty corpus");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("length_percentile: q must be in [0,1]");
  std::sort(counts.begin(), counts.end());
  const double n = static_cast<double>(counts.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, counts.size());
  return counts[rank - 1];
}

std::uint64_t length_percentile(std::span<const Book> corpus, double q) {
  std::vector<std::uint64_t> counts;
  counts.reserve(corpus.size());
  for (const auto& b : corpus) counts.push_back(book_word_count(b));
  return length_percentile(std::move(counts), q);
}

std::string normalize_key_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<Book> dedup_by_author_title(std::span<const Book> corpus) {
  std::map<std::pair<std::string, std::string>, const Book*> keeper;
  for (const auto& b : corpus) {
    auto key = std::make_pair(normalize_key_text(b.metadata.author),
                              normalize_key_text(b.metadata.title));
    auto [it, inserted] = keeper.emplace(std::move(key), &b);
    if (!inserted && b.id < it->second->id) it->second = &b;
  }
  std::vector<Book> out;
  out.reserve(keeper.size());
  for (const auto& [key, book] : keeper) out.push_back(*book);
  std::sort(out.begin(), out.end(), [](const Book& a, const Book& b) { return a.id < b.id; });
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  TsvTable table;
  table.header = {"id", "path", "word_count"};
  for (const auto& e : entries) {
    table.rows.push_back({e.id, e.path.generic_string(), std::to_string(e.word_count)});
  }
  write_tsv(path, table);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const auto table = read_tsv(path);
  const auto id = table.column("id");
  const auto p = table.column("path");
  const auto wc = table.column("word_count");
  std::vector<ManifestEntry> out;
  for (const auto& row : table.rows) {
    ManifestEntry e;
    e.id = row[id];
    e.path = row[p];
    try {
      e.word_count = std::stoull(row[wc]);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": bad word_count for '" + e.id + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Book> load_corpus(const std::filesystem::path& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  std::vector<Book> books(entries.size());
  std::vector<std::string> errors(entries.size());
  // Each file is independent; errors are collected and reported in manifest order.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      const auto& p = entries[i].path;
      books[i] = load_book(p.is_absolute() ? p : base / p);
      if (books[i].id != entries[i].id) {
        throw ValidationError("manifest id '" + entries[i].id + "' does not match book id '" +
                              books[i].id + "'");
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw ParseError(e);
  }
  return books;
}

std::string file_stem_for_id(std::string_view id) {
  std::string out(id);
  for (auto& c : out) {
    if (c == ':' || c == '/' || c == '\\') c = '_';
  }
  return out;
}

}  // namespace bookrel
