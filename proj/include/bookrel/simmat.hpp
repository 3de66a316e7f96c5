#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bookrel/embed.hpp"
#include "bookrel/label.hpp"

namespace bookrel {

inline constexpr std::size_t kDefaultMatrixSize = 32;

/// Unpadded rows x cols matrix, row-major; rows index the left book's chunks.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// Fixed-size, zero-padded chunk similarity matrix for an ordered book pair.
/// Values outside the top-left live block are exactly zero.
struct SimilarityMatrix {
  std::size_t size = 0;
  std::uint32_t left_chunks = 0;   // before truncation
  std::uint32_t right_chunks = 0;  // before truncation
  std::vector<float> values;       // size x size, row-major

  float at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
  std::size_t live_rows() const { return std::min<std::size_t>(left_chunks, size); }
  std::size_t live_cols() const { return std::min<std::size_t>(right_chunks, size); }

  bool operator==(const SimilarityMatrix&) const = default;
};

/// u.v / (|u||v|); 0 if either vector is zero. Throws on dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

DenseMatrix pairwise_similarity(std::span<const Vector> left, std::span<const Vector> right);

/// Top-left anchored copy into an S x S zero matrix; rows/cols beyond S are dropped.
SimilarityMatrix pad_truncate(const DenseMatrix& m, std::size_t size);

/// concat((left + right) / 2, left - right)
struct PairFeatures {
  std::vector<double> values;
  std::size_t dim() const { return values.size() / 2; }
  bool operator==(const PairFeatures&) const = default;
};

PairFeatures pair_features(std::span<const double> left, std::span<const double> right);

/// Binary matrix file: 16-byte header of little-endian u32 (magic "SIMM",
/// size, left_chunks, right_chunks) followed by size*size little-endian f32.
std::string encode_similarity_matrix(const SimilarityMatrix& m);
SimilarityMatrix decode_similarity_matrix(std::string_view bytes);
void write_similarity_matrix(const SimilarityMatrix& m, const std::filesystem::path& path);
SimilarityMatrix read_similarity_matrix(const std::filesystem::path& path);

/// Per-book featurization shared by every pair the book appears in.
struct BookFeatures {
  std::vector<Vector> chunks;
  Vector book;
  std::uint64_t word_count = 0;
};

BookFeatures featurize_book(const Book& book, const EmbeddingTable& table, std::size_t chunk_size);

/// A featurized, labeled book pair: the classifier's unit of input.
struct PairExample {
  std::string left_id;
  std::string right_id;
  SimilarityMatrix matrix;
  PairFeatures pair;
  RelationshipLabel label = RelationshipLabel::DIFF;
  Provenance provenance = Provenance::Real;
  std::uint64_t left_words = 0;
  std::uint64_t right_words = 0;
};

PairExample featurize_pair(const LabeledPair& labeled, const BookFeatures& left,
                           const BookFeatures& right, std::size_t matrix_size);

/// Feature directory: features-manifest.tsv plus matrices/<n>.sim.
void write_feature_set(const std::filesystem::path& dir, std::span<const PairExample> examples);
std::vector<PairExample> read_feature_set(const std::filesystem::path& dir);

}  // namespace bookrel
