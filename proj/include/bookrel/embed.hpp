#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bookrel/corpus.hpp"

namespace bookrel {

using Vector = std::vector<double>;

/// Word -> d-dimensional vector. Immutable once built.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return index_.size(); }

  /// Inserts or replaces a word's vector. Returns false if it replaced one.
  bool set(std::string word, std::span<const float> vector);

  /// Empty span for out-of-vocabulary words.
  std::span<const float> lookup(std::string_view word) const;

  /// Words in insertion order.
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> words_;
  std::vector<float> data_;
};

struct EmbeddingLoadStats {
  std::size_t duplicates = 0;
};

/// Text format: "word f1 ... fd" per line, no header. Dimension is taken
/// from the first line; duplicate words keep the last vector.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               EmbeddingLoadStats* stats = nullptr);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

struct Chunk {
  std::size_t ordinal = 0;
  std::vector<TokenCount> tokens;  // sorted by token
  std::uint64_t word_count = 0;
};

struct ChunkVector {
  std::size_t ordinal = 0;
  Vector vector;
  std::uint64_t words_embedded = 0;
};

inline constexpr std::size_t kDefaultChunkWords = 5000;

/// Accumulates whole pages into a chunk until it holds >= chunk_size words.
/// Pages are never split; a trailing partial chunk is kept if non-empty.
std::vector<Chunk> chunk_book(const Book& book, std::size_t chunk_size = kDefaultChunkWords);

/// Count-weighted sum of in-vocabulary token vectors.
ChunkVector chunk_vector(const Chunk& chunk, const EmbeddingTable& table);

/// Sum over every token occurrence of the book.
Vector book_vector(const Book& book, const EmbeddingTable& table);

}  // namespace bookrel
