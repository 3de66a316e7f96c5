#include "bookrel/simmat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "bookrel/kernels.hpp"
#include "bookrel/tsv.hpp"

namespace bookrel {

namespace {

constexpr std::uint32_t kMatrixMagic = 0x4D4D4953;  // "SIMM" in little-endian byte order

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

std::vector<double> flatten(std::span<const Vector> rows, std::size_t dim) {
  std::vector<double> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw ValidationError("pairwise_similarity: inconsistent vector dimension");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return flat;
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ValidationError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  double out = 0.0;
  kernels::pairwise_cosine(u, 1, v, 1, u.size(), std::span<double>(&out, 1));
  return out;
}

DenseMatrix pairwise_similarity(std::span<const Vector> left, std::span<const Vector> right) {
  DenseMatrix m;
  m.rows = left.size();
  m.cols = right.size();
  m.values.assign(m.rows * m.cols, 0.0);
  if (m.rows == 0 || m.cols == 0) return m;
  const std::size_t dim = left.front().size();
  const auto l = flatten(left, dim);
  const auto r = flatten(right, dim);
  kernels::pairwise_cosine(l, m.rows, r, m.cols, dim, m.values);
  return m;
}

SimilarityMatrix pad_truncate(const DenseMatrix& m, std::size_t size) {
  if (size == 0) throw ValidationError("pad_truncate: size must be >= 1");
  SimilarityMatrix out;
  out.size = size;
  out.left_chunks = static_cast<std::uint32_t>(m.rows);
  out.right_chunks = static_cast<std::uint32_t>(m.cols);
  out.values.assign(size * size, 0.0F);
  const std::size_t rows = std::min(m.rows, size);
  const std::size_t cols = std::min(m.cols, size);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out.values[i * size + j] = static_cast<float>(m.at(i, j));
  }
  return out;
}

PairFeatures pair_features(std::span<const double> left, std::span<const double> right) {
  if (left.size() != right.size()) {
    throw ValidationError("pair_features: dimension mismatch (" + std::to_string(left.size()) +
                          " vs " + std::to_string(right.size()) + ")");
  }
  const std::size_t d = left.size();
  PairFeatures out;
  out.values.resize(2 * d);
  for (std::size_t k = 0; k < d; ++k) {
    out.values[k] = (left[k] + right[k]) / 2.0;
    out.values[d + k] = left[k] - right[k];
  }
  return out;
}

std::string encode_similarity_matrix(const SimilarityMatrix& m) {
  std::string out;
  out.reserve(16 + 4 * m.values.size());
  put_u32(out, kMatrixMagic);
  put_u32(out, static_cast<std::uint32_t>(m.size));
  put_u32(out, m.left_chunks);
  put_u32(out, m.right_chunks);
  for (float v : m.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

SimilarityMatrix decode_similarity_matrix(std::string_view bytes) {
  if (bytes.size() < 16) throw ParseError("similarity matrix: truncated header");
  if (get_u32(bytes, 0) != kMatrixMagic) throw ParseError("similarity matrix: bad magic");
  SimilarityMatrix m;
  m.size = get_u32(bytes, 4);
  m.left_chunks = get_u32(bytes, 8);
  m.right_chunks = get_u32(bytes, 12);
  if (m.size == 0 || bytes.size() != 16 + 4 * m.size * m.size) {
    throw ParseError("similarity matrix: expected " + std::to_string(16 + 4 * m.size * m.size) +
                     " bytes, got " + std::to_string(bytes.size()));
  }
  m.values.resize(m.size * m.size);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
    if (!std::isfinite(m.values[i])) throw ParseError("similarity matrix: non-finite value");
  }
  return m;
}

void write_similarity_matrix(const SimilarityMatrix& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_similarity_matrix(m));
}

SimilarityMatrix read_similarity_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_similarity_matrix(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

BookFeatures featurize_book(const Book& book, const EmbeddingTable& table, std::size_t chunk_size) {
  BookFeatures f;
  for (const auto& chunk : chunk_book(book, chunk_size)) {
    f.chunks.push_back(chunk_vector(chunk, table).vector);
  }
  f.book = book_vector(book, table);
  f.word_count = book_word_count(book);
  return f;
}

PairExample featurize_pair(const LabeledPair& labeled, const BookFeatures& left,
                           const BookFeatures& right, std::size_t matrix_size) {
  PairExample ex;
  ex.left_id = labeled.left_id;
  ex.right_id = labeled.right_id;
  ex.label = labeled.label;
  ex.provenance = labeled.provenance;
  ex.matrix = pad_truncate(pairwise_similarity(left.chunks, right.chunks), matrix_size);
  ex.pair = pair_features(left.book, right.book);
  ex.left_words = left.word_count;
  ex.right_words = right.word_count;
  return ex;
}

void write_feature_set(const std::filesystem::path& dir, std::span<const PairExample> examples) {
  TsvTable table;
  table.header = {"pair",        "left_id",    "right_id",    "label",
                  "provenance",  "matrix",     "left_words",  "right_words",
                  "pair_features"};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const auto rel = std::filesystem::path("matrices") / (std::to_string(i) + ".sim");
    write_similarity_matrix(ex.matrix, dir / rel);
    std::string feats;
    for (std::size_t k = 0; k < ex.pair.values.size(); ++k) {
      if (k) feats.push_back(',');
      feats += format_double(ex.pair.values[k]);
    }
    table.rows.push_back({std::to_string(i), ex.left_id, ex.right_id, std::string(to_string(ex.label)),
                          std::string(to_string(ex.provenance)), rel.generic_string(),
                          std::to_string(ex.left_words), std::to_string(ex.right_words),
                          std::move(feats)});
  }
  write_tsv(dir / "features-manifest.tsv", table);
}

std::vector<PairExample> read_feature_set(const std::filesystem::path& dir) {
  const auto table = read_tsv(dir / "features-manifest.tsv");
  const auto left = table.column("left_id");
  const auto right = table.column("right_id");
  const auto label = table.column("label");
  const auto prov = table.column("provenance");
  const auto matrix = table.column("matrix");
  const auto lw = table.column("left_words");
  const auto rw = table.column("right_words");
  const auto feats = table.column("pair_features");
  std::vector<PairExample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    PairExample ex;
    ex.left_id = row[left];
    ex.right_id = row[right];
    ex.label = parse_label(row[label]);
    ex.provenance = parse_provenance(row[prov]);
    ex.matrix = read_similarity_matrix(dir / row[matrix]);
    ex.left_words = std::stoull(row[lw]);
    ex.right_words = std::stoull(row[rw]);
    for (const auto& v : split(row[feats], ',')) ex.pair.values.push_back(parse_double(v));
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace bookrel
