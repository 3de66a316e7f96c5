#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bookrel/corpus.hpp"

namespace bookrel::test {

inline Page page(const std::map<std::string, std::uint32_t>& counts) {
  std::vector<TokenCount> tc;
  for (const auto& [t, c] : counts) tc.push_back({t, c});
  return Page::from_counts(std::move(tc));
}

/// A page of `words` occurrences of one token.
inline Page page_of(const std::string& token, std::uint32_t words) { return page({{token, words}}); }

/// Book whose pages are distinct: page i holds token "<id>p<i>".
inline Book book(const std::string& id, std::size_t pages, std::uint32_t words_per_page = 10,
                 std::string work_key = "") {
  Book b;
  b.id = id;
  for (std::size_t i = 0; i < pages; ++i) b.pages.push_back(page_of(id + "p" + std::to_string(i), words_per_page));
  b.reindex();
  b.metadata.title = "title " + id;
  b.metadata.author = "author " + id;
  b.metadata.work_key = work_key.empty() ? id : work_key;
  return b;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    const std::uint64_t tag = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    path_ = std::filesystem::temp_directory_path() / ("bookrel-test-" + std::to_string(tag));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace bookrel::test
