#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bookrel/label.hpp"

namespace bookrel {

struct TokenCount {
  std::string token;
  std::uint32_t count = 0;

  bool operator==(const TokenCount&) const = default;
};

/// One scanned page as a bag of lowercase tokens.
///
/// Tokens are kept sorted and unique so that two pages with the same counts
/// compare equal regardless of how they were built.
class Page {
 public:
  Page() = default;

  /// Builds a page from (token, count) entries. Tokens are lowercased and
  /// merged; counts must be >= 1.
  static Page from_counts(std::vector<TokenCount> counts);

  std::size_t index = 0;

  const std::vector<TokenCount>& tokens() const { return tokens_; }
  std::uint64_t word_count() const { return word_count_; }

  /// Same tokens and counts; the page index is ignored.
  bool same_content(const Page& other) const { return tokens_ == other.tokens_; }
  bool operator==(const Page& other) const {
    return index == other.index && tokens_ == other.tokens_;
  }

 private:
  std::vector<TokenCount> tokens_;
  std::uint64_t word_count_ = 0;
};

struct BookMetadata {
  std::string title;
  std::string author;
  std::optional<std::string> enumeration_raw;
  std::optional<std::string> work_key;

  bool operator==(const BookMetadata&) const = default;
};

struct Book {
  std::string id;
  std::vector<Page> pages;
  BookMetadata metadata;

  /// Renumbers pages 0..n-1 in their current order.
  void reindex();

  /// Throws ValidationError if the book has no pages, a non-contiguous page
  /// index, an empty id or an empty work_key.
  void validate() const;

  bool operator==(const Book&) const = default;
};

std::uint64_t book_word_count(const Book& book);

/// JSON book format: {"id", "metadata": {"title","author","enumeration","work_key"},
/// "pages": [{"tokens": {token: count}}]}.
Book book_from_json(const nlohmann::json& j);
nlohmann::json book_to_json(const Book& book);

Book load_book(const std::filesystem::path& path);
void save_book(const Book& book, const std::filesystem::path& path);

/// Nearest-rank percentile of book word counts: the smallest count w such
/// that at least ceil(q*N) books have a count <= w. q=0 yields the minimum.
std::uint64_t length_percentile(std::span<const Book> corpus, double q);
std::uint64_t length_percentile(std::vector<std::uint64_t> word_counts, double q);

/// Lowercase and collapse runs of whitespace; used for author/title keys.
std::string normalize_key_text(std::string_view text);

/// Keeps one book per normalized (author, title), the one with the smallest id.
/// Output is ordered by id.
std::vector<Book> dedup_by_author_title(std::span<const Book> corpus);

struct ManifestEntry {
  std::string id;
  std::filesystem::path path;
  std::uint64_t word_count = 0;
};

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Loads every book listed in a manifest, in manifest order. Relative paths are
/// resolved against the manifest's directory.
std::vector<Book> load_corpus(const std::filesystem::path& manifest_path);

/// Filesystem-safe stem for a book id (':' and '/' become '_').
std::string file_stem_for_id(std::string_view id);

}  // namespace bookrel
