#include "bookrel/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace bookrel {

ConfusionMatrix::ConfusionMatrix(std::vector<RelationshipLabel> classes) : classes_(std::move(classes)) {
  if (classes_.empty()) throw ValidationError("confusion matrix needs at least one class");
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (std::find(classes_.begin() + i + 1, classes_.end(), classes_[i]) != classes_.end()) {
      throw ValidationError("duplicate class " + std::string(to_string(classes_[i])));
    }
  }
  counts_.assign(classes_.size() * classes_.size(), 0);
}

std::size_t ConfusionMatrix::index_of(RelationshipLabel label) const {
  const auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) {
    throw ValidationError("label " + std::string(to_string(label)) + " not in confusion class list");
  }
  return static_cast<std::size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(RelationshipLabel truth, RelationshipLabel predicted, std::size_t n) {
  counts_[index_of(truth) * classes_.size() + index_of(predicted)] += n;
}

std::size_t ConfusionMatrix::count(std::size_t truth, std::size_t predicted) const {
  return counts_.at(truth * classes_.size() + predicted);
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double macro_average(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

const ClassMetrics* MetricsReport::find(RelationshipLabel label) const {
  for (const auto& m : per_class) {
    if (m.label == label) return &m;
  }
  return nullptr;
}

MetricsReport compute_metrics(const ConfusionMatrix& confusion,
                              std::span<const RelationshipLabel> macro_classes) {
  const auto& classes = confusion.classes();
  const std::size_t n = classes.size();
  MetricsReport report;
  report.total = confusion.total();
  if (report.total == 0) throw ValidationError("compute_metrics: empty confusion matrix");

  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };

  std::size_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  for (std::size_t c = 0; c < n; ++c) {
    ClassMetrics m;
    m.label = classes[c];
    m.true_positives = confusion.count(c, c);
    for (std::size_t o = 0; o < n; ++o) {
      if (o == c) continue;
      m.false_positives += confusion.count(o, c);
      m.false_negatives += confusion.count(c, o);
    }
    m.support = m.true_positives + m.false_negatives;
    m.precision = ratio(m.true_positives, m.true_positives + m.false_positives);
    m.recall = ratio(m.true_positives, m.support);
    m.f1 = f1_score(m.precision, m.recall);
    tp_sum += m.true_positives;
    fp_sum += m.false_positives;
    fn_sum += m.false_negatives;
    report.per_class.push_back(m);
  }

  std::vector<double> ps, rs, fs;
  for (auto label : macro_classes) {
    if (const auto* m = report.find(label)) {
      report.macro_classes.push_back(label);
      ps.push_back(m->precision);
      rs.push_back(m->recall);
      fs.push_back(m->f1);
    }
  }
  report.macro_precision = macro_average(ps);
  report.macro_recall = macro_average(rs);
  report.macro_f1 = macro_average(fs);

  report.micro_precision = ratio(tp_sum, tp_sum + fp_sum);
  report.micro_recall = ratio(tp_sum, tp_sum + fn_sum);
  report.micro_f1 = f1_score(report.micro_precision, report.micro_recall);
  report.accuracy = ratio(tp_sum, report.total);
  return report;
}

}  // namespace bookrel
