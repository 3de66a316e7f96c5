#include <gtest/gtest.h>

#include "bookrel/metrics.hpp"
#include "bookrel/rng.hpp"

using namespace bookrel;
using L = RelationshipLabel;

namespace {

const std::vector<L> kAll{L::SW, L::DV, L::PARTOF, L::CONTAINS, L::DIFF, L::OVERLAPS};

}  // namespace

TEST(F1, KnownValues) {
  EXPECT_NEAR(f1_score(0.82, 0.76), 0.789, 5e-4);
  EXPECT_DOUBLE_EQ(f1_score(1.0, 1.0), 1.0);
  EXPECT_EQ(f1_score(0.0, 0.0), 0.0);
  EXPECT_EQ(f1_score(0.0, 0.9), 0.0);
}

TEST(Macro, Average) {
  const std::vector<double> v{0.44, 0.38};
  EXPECT_NEAR(macro_average(v), 0.41, 1e-12);
  EXPECT_EQ(macro_average(std::vector<double>{}), 0.0);
}

TEST(Confusion, RejectsUnknownAndDuplicateClasses) {
  ConfusionMatrix m({L::SW, L::DV});
  EXPECT_THROW(m.add(L::SW, L::DIFF), ValidationError);
  EXPECT_THROW(ConfusionMatrix({L::SW, L::SW}), ValidationError);
  EXPECT_THROW(compute_metrics(m), ValidationError);
}

TEST(Metrics, PerfectPredictor) {
  ConfusionMatrix m(kAll);
  for (std::size_t i = 0; i < kAll.size(); ++i) m.add(kAll[i], kAll[i], i + 1);
  const auto r = compute_metrics(m);
  for (const auto& c : r.per_class) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
    EXPECT_EQ(c.f1, 1.0);
  }
  EXPECT_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.micro_f1, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Metrics, ZeroDivisionIsZero) {
  ConfusionMatrix m({L::PARTOF, L::CONTAINS, L::DIFF});
  m.add(L::DIFF, L::DIFF, 5);
  const auto r = compute_metrics(m);
  const auto* partof = r.find(L::PARTOF);
  ASSERT_NE(partof, nullptr);
  EXPECT_EQ(partof->precision, 0.0);
  EXPECT_EQ(partof->recall, 0.0);
  EXPECT_EQ(partof->f1, 0.0);
  EXPECT_EQ(r.find(L::SW), nullptr);
}

TEST(Metrics, MacroOverWholePartOnly) {
  ConfusionMatrix m({L::PARTOF, L::CONTAINS, L::DIFF});
  m.add(L::PARTOF, L::PARTOF, 3);
  m.add(L::PARTOF, L::DIFF, 1);
  m.add(L::CONTAINS, L::CONTAINS, 1);
  m.add(L::CONTAINS, L::PARTOF, 1);
  m.add(L::DIFF, L::DIFF, 10);
  const auto r = compute_metrics(m);
  EXPECT_NEAR(r.find(L::PARTOF)->precision, 0.75, 1e-12);
  EXPECT_NEAR(r.find(L::PARTOF)->recall, 0.75, 1e-12);
  EXPECT_NEAR(r.find(L::CONTAINS)->precision, 1.0, 1e-12);
  EXPECT_NEAR(r.find(L::CONTAINS)->recall, 0.5, 1e-12);
  EXPECT_NEAR(r.macro_precision, 0.875, 1e-12);
  EXPECT_NEAR(r.macro_recall, 0.625, 1e-12);
  EXPECT_NEAR(r.macro_f1, (0.75 + 2.0 / 3.0) / 2.0, 1e-12);
}

// Counts are re-derived from a list of (truth, prediction) draws and compared
// with the confusion-based metrics.
TEST(Metrics, RandomMatricesAgreeWithBruteForce) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    ConfusionMatrix m(kAll);
    std::vector<std::pair<L, L>> draws;
    const auto n = 1 + rng.uniform_index(80);
    for (std::uint64_t i = 0; i < n; ++i) {
      const L t = kAll[rng.uniform_index(kAll.size())];
      const L p = kAll[rng.uniform_index(kAll.size())];
      draws.emplace_back(t, p);
      m.add(t, p);
    }
    const auto r = compute_metrics(m);
    std::size_t correct = 0;
    for (const auto& [t, p] : draws) correct += t == p ? 1 : 0;
    EXPECT_NEAR(r.accuracy, static_cast<double>(correct) / n, 1e-12);
    // With every prediction inside the class list, pooled counts give micro F1 = accuracy.
    EXPECT_NEAR(r.micro_f1, r.accuracy, 1e-12);
    for (const auto& c : r.per_class) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (const auto& [t, p] : draws) {
        tp += t == c.label && p == c.label ? 1 : 0;
        fp += t != c.label && p == c.label ? 1 : 0;
        fn += t == c.label && p != c.label ? 1 : 0;
      }
      EXPECT_EQ(c.true_positives, tp);
      EXPECT_EQ(c.false_positives, fp);
      EXPECT_EQ(c.false_negatives, fn);
      EXPECT_EQ(c.support, tp + fn);
      const double p = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
      const double rc = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
      EXPECT_NEAR(c.precision, p, 1e-12);
      EXPECT_NEAR(c.recall, rc, 1e-12);
      EXPECT_NEAR(c.f1, p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0, 1e-12);
      EXPECT_GE(c.f1, 0.0);
      EXPECT_LE(c.f1, 1.0);
    }
    EXPECT_NEAR(r.macro_f1, (r.find(L::PARTOF)->f1 + r.find(L::CONTAINS)->f1) / 2.0, 1e-12);
  }
}
