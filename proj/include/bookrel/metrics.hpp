#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bookrel/label.hpp"

namespace bookrel {

struct ClassMetrics {
  RelationshipLabel label = RelationshipLabel::DIFF;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // true examples of this class
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// counts[true][predicted], indexed by position in `classes`.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<RelationshipLabel> classes);

  /// Throws ValidationError for labels outside the class list.
  void add(RelationshipLabel truth, RelationshipLabel predicted, std::size_t n = 1);

  const std::vector<RelationshipLabel>& classes() const { return classes_; }
  std::size_t count(std::size_t truth, std::size_t predicted) const;
  std::size_t total() const;

 private:
  std::size_t index_of(RelationshipLabel label) const;

  std::vector<RelationshipLabel> classes_;
  std::vector<std::size_t> counts_;
};

inline constexpr RelationshipLabel kWholePartClasses[] = {RelationshipLabel::PARTOF,
                                                          RelationshipLabel::CONTAINS};

/// 2PR/(P+R), or 0 when P+R is 0.
double f1_score(double precision, double recall);

/// Arithmetic mean; 0 for an empty list.
double macro_average(std::span<const double> values);

struct MetricsReport {
  std::vector<ClassMetrics> per_class;  // in confusion class order
  std::vector<RelationshipLabel> macro_classes;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t total = 0;

  const ClassMetrics* find(RelationshipLabel label) const;
};

/// Per-class precision/recall/F1, macro averages over `macro_classes` (those
/// absent from the confusion class list are skipped), and micro averages
/// pooled over all classes. Throws ValidationError on an empty matrix.
MetricsReport compute_metrics(const ConfusionMatrix& confusion,
                              std::span<const RelationshipLabel> macro_classes = kWholePartClasses);

}  // namespace bookrel
