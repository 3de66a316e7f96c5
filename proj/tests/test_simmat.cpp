#include <gtest/gtest.h>

#include "bookrel/simmat.hpp"
#include "kernel_cases.hpp"
#include "test_util.hpp"

using namespace bookrel;

TEST(Cosine, Examples) {
  const Vector x{0.3, -1.2, 4.0};
  EXPECT_NEAR(cosine(x, x), 1.0, 1e-15);
  EXPECT_EQ(cosine(Vector{1, 0}, Vector{0, 1}), 0.0);
  EXPECT_NEAR(cosine(Vector{1, 2}, Vector{2, 1}), 0.8, 1e-15);
  EXPECT_EQ(cosine(Vector{0, 0}, Vector{1, 1}), 0.0);
  EXPECT_THROW(cosine(Vector{1}, Vector{1, 2}), ValidationError);
}

TEST(Cosine, ScaleInvariant) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto u = test::random_vector(rng, 6), v = test::random_vector(rng, 6);
    const double alpha = rng.uniform(0.01, 100.0);
    Vector au(u);
    for (auto& x : au) x *= alpha;
    EXPECT_NEAR(cosine(au, v), cosine(u, v), 1e-12);
  }
}

TEST(Pairwise, HandComputed2x3) {
  const std::vector<Vector> left{{1, 0}, {1, 1}};
  const std::vector<Vector> right{{1, 0}, {0, 1}, {3, 4}};
  const auto m = pairwise_similarity(left, right);
  ASSERT_EQ(m.rows, 2u);
  ASSERT_EQ(m.cols, 3u);
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<double> expected{1, 0, 0.6, r, r, 7.0 / (5.0 * std::sqrt(2.0))};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(m.values[i], expected[i], 1e-12);
}

TEST(Pairwise, SelfIsSymmetricWithUnitDiagonalAndTransposes) {
  Rng rng(2);
  std::vector<Vector> a, b;
  for (int i = 0; i < 5; ++i) a.push_back(test::random_vector(rng, 4));
  for (int i = 0; i < 3; ++i) b.push_back(test::random_vector(rng, 4));
  const auto self = pairwise_similarity(a, a);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(self.at(i, i), 1.0, 1e-12);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(self.at(i, j), self.at(j, i));
  }
  const auto ab = pairwise_similarity(a, b), ba = pairwise_similarity(b, a);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(ab.at(i, j), ba.at(j, i));
  }
  EXPECT_EQ(pairwise_similarity({}, b).rows, 0u);
}

TEST(PadTruncate, PadsAndTruncatesTopLeft) {
  DenseMatrix m{2, 3, {1, 2, 3, 4, 5, 6}};
  const auto p = pad_truncate(m, 4);
  EXPECT_EQ(p.left_chunks, 2u);
  EXPECT_EQ(p.right_chunks, 3u);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(p.at(i, j), (i < 2 && j < 3) ? static_cast<float>(m.at(i, j)) : 0.0f);
    }
  }
  DenseMatrix big{6, 6, {}};
  for (int i = 0; i < 36; ++i) big.values.push_back(i / 36.0);
  const auto t = pad_truncate(big, 4);
  EXPECT_EQ(t.live_rows(), 4u);
  EXPECT_EQ(t.at(3, 3), static_cast<float>(big.at(3, 3)));
}

TEST(PairFeatures, Examples) {
  EXPECT_EQ(pair_features(Vector{2, 0}, Vector{0, 2}).values, (Vector{1, 1, 2, -2}));
  const Vector x{1.5, -3};
  EXPECT_EQ(pair_features(x, x).values, (Vector{1.5, -3, 0, 0}));
  const auto ab = pair_features(Vector{1, 2, 3}, Vector{-4, 0, 9});
  const auto ba = pair_features(Vector{-4, 0, 9}, Vector{1, 2, 3});
  EXPECT_EQ(ab.dim(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(ab.values[i], ba.values[i]);
    EXPECT_EQ(ab.values[3 + i], -ba.values[3 + i]);
  }
  EXPECT_THROW(pair_features(Vector{1}, Vector{1, 2}), ValidationError);
}

TEST(MatrixFile, RoundTripAndHeader) {
  DenseMatrix m{2, 2, {0.5, -0.25, 1, 0}};
  const auto s = pad_truncate(m, 3);
  const auto bytes = encode_similarity_matrix(s);
  ASSERT_EQ(bytes.size(), 16u + 9u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "SIMM");
  EXPECT_EQ(decode_similarity_matrix(bytes), s);
  EXPECT_THROW(decode_similarity_matrix(bytes.substr(0, 20)), ParseError);
  EXPECT_THROW(decode_similarity_matrix("XXXX" + bytes.substr(4)), ParseError);
}

TEST(Featurize, DirectionDuality) {
  EmbeddingTable t(3);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    std::vector<float> v(3);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    t.set("w" + std::to_string(i), v);
  }
  auto random_book = [&](const std::string& id, std::size_t pages) {
    Book b;
    b.id = id;
    for (std::size_t p = 0; p < pages; ++p) {
      std::map<std::string, std::uint32_t> c;
      for (int k = 0; k < 30; ++k) ++c["w" + std::to_string(rng.uniform_index(20))];
      b.pages.push_back(test::page(c));
    }
    b.reindex();
    return b;
  };
  const auto a = featurize_book(random_book("a", 9), t, 50);
  const auto b = featurize_book(random_book("b", 5), t, 50);
  const auto ab = featurize_pair({"a", "b", RelationshipLabel::CONTAINS}, a, b, 8);
  const auto ba = featurize_pair({"b", "a", RelationshipLabel::PARTOF}, b, a, 8);
  ASSERT_EQ(ab.matrix.live_rows(), ba.matrix.live_cols());
  for (std::size_t i = 0; i < ab.matrix.live_rows(); ++i) {
    for (std::size_t j = 0; j < ab.matrix.live_cols(); ++j) {
      EXPECT_EQ(ab.matrix.at(i, j), ba.matrix.at(j, i));
      EXPECT_GE(ab.matrix.at(i, j), -1.0f - 1e-6f);
      EXPECT_LE(ab.matrix.at(i, j), 1.0f + 1e-6f);
    }
  }
}

TEST(FeatureSet, RoundTrip) {
  test::TempDir dir;
  PairExample e;
  e.left_id = "a";
  e.right_id = "synth:split:1:0";
  e.matrix = pad_truncate(DenseMatrix{1, 2, {0.5, 0.25}}, 4);
  e.pair = pair_features(Vector{0.1, 1e10}, Vector{-3, 1.0 / 3.0});
  e.label = RelationshipLabel::CONTAINS;
  e.provenance = Provenance::Synthetic;
  e.left_words = 12;
  e.right_words = 7;
  const std::vector<PairExample> in{e, e};
  write_feature_set(dir.path(), in);
  const auto out = read_feature_set(dir.path());
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].matrix, e.matrix);
  EXPECT_EQ(out[1].pair, e.pair);
  EXPECT_EQ(out[1].label, e.label);
  EXPECT_EQ(out[1].provenance, e.provenance);
  EXPECT_EQ(out[1].right_id, e.right_id);
  EXPECT_EQ(out[1].left_words, 12u);
}
