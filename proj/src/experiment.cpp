#include "bookrel/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "bookrel/rng.hpp"
#include "bookrel/tsv.hpp"

namespace bookrel {

namespace {

std::string unordered_key(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  std::string key(a);
  key += '\t';
  key += b;
  return key;
}

std::string work_of(const Book& b) { return b.metadata.work_key.value_or(b.id); }

}  // namespace

std::string_view to_string(Condition condition) {
  switch (condition) {
    case Condition::NoFake: return "nofake";
    case Condition::Mixed: return "mixed";
    case Condition::AllFake: return "allfake";
  }
  return "?";
}

Condition parse_condition(std::string_view text) {
  if (text == "nofake") return Condition::NoFake;
  if (text == "mixed") return Condition::Mixed;
  if (text == "allfake") return Condition::AllFake;
  throw ParseError("unknown condition '" + std::string(text) + "' (expected nofake, mixed or allfake)");
}

std::vector<Book> filter_oversize(std::span<const Book> corpus, std::uint64_t max_words) {
  std::vector<Book> out;
  for (const auto& b : corpus) {
    if (book_word_count(b) <= max_words) out.push_back(b);
  }
  return out;
}

bool in_test_split(std::string_view left_id, std::string_view right_id) {
  return fnv1a64(unordered_key(left_id, right_id)) % 5 == 0;
}

std::vector<LabeledPair> to_labeled_pairs(std::span<const GroundTruthRelation> relations) {
  std::vector<LabeledPair> out;
  out.reserve(relations.size());
  for (const auto& r : relations) out.push_back({r.left_id, r.right_id, r.label, Provenance::Real});
  return out;
}

std::vector<LabeledPair> sample_diff_pairs(std::span<const Book> books, std::size_t count, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < books.size(); ++i) {
    for (std::size_t j = i + 1; j < books.size(); ++j) {
      if (work_of(books[i]) != work_of(books[j])) candidates.emplace_back(i, j);
    }
  }
  Rng rng(seed);
  const std::size_t n = std::min(count, candidates.size());
  // Partial Fisher-Yates: the first n slots are a uniform sample without replacement.
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  std::vector<LabeledPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [a, b] = candidates[i];
    if (rng.bernoulli(0.5)) std::swap(a, b);
    out.push_back({books[a].id, books[b].id, RelationshipLabel::DIFF, Provenance::Real});
  }
  return out;
}

std::unordered_map<std::string, const Book*> index_books(std::span<const Book> books) {
  std::unordered_map<std::string, const Book*> index;
  for (const auto& b : books) index.emplace(b.id, &b);
  return index;
}

std::vector<PairExample> featurize_pairs(std::span<const LabeledPair> pairs,
                                         const std::unordered_map<std::string, const Book*>& books,
                                         const EmbeddingTable& table, const FeaturizeOptions& options) {
  std::vector<const Book*> needed;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& p : pairs) {
    for (const auto* id : {&p.left_id, &p.right_id}) {
      if (slot.contains(*id)) continue;
      const auto it = books.find(*id);
      if (it == books.end()) throw ValidationError("featurize: unknown book id '" + *id + "'");
      slot.emplace(*id, needed.size());
      needed.push_back(it->second);
    }
  }
  std::vector<BookFeatures> features(needed.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < needed.size(); ++i) {
    features[i] = featurize_book(*needed[i], table, options.chunk_size);
  }
  std::vector<PairExample> out(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out[i] = featurize_pair(pairs[i], features[slot.at(pairs[i].left_id)], features[slot.at(pairs[i].right_id)],
                            options.matrix_size);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (!(synth_fraction >= 0.0 && synth_fraction <= 1.0)) {
    throw ValidationError("synth_fraction must be in [0, 1]");
  }
  if (condition == Condition::NoFake && synth_fraction != 0.0) {
    throw ValidationError("the nofake condition uses no synthetic data (synth_fraction must be 0)");
  }
  if (!(whole_part_cap >= 0.0 && whole_part_cap <= 1.0)) {
    throw ValidationError("whole_part_cap must be in [0, 1]");
  }
  train.validate();
}

double ConditionReport::synthetic_real_ratio() const {
  if (real_whole_part_train == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(synthetic_whole_part_train) / static_cast<double>(real_whole_part_train);
}

std::vector<RelationshipLabel> pool_classes(const ExperimentPools& pools) {
  std::set<RelationshipLabel> seen;
  for (const auto& e : pools.real) seen.insert(e.label);
  for (const auto& e : pools.synthetic) seen.insert(e.label);
  return {seen.begin(), seen.end()};
}

std::vector<std::size_t> test_indices(const ExperimentPools& pools) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pools.real.size(); ++i) {
    if (in_test_split(pools.real[i].left_id, pools.real[i].right_id)) out.push_back(i);
  }
  return out;
}

TrainingSelection select_training(const ExperimentPools& pools, const ExperimentConfig& config) {
  config.validate();
  TrainingSelection sel;

  std::vector<std::size_t> whole_part;
  for (std::size_t i = 0; i < pools.real.size(); ++i) {
    const auto& e = pools.real[i];
    if (in_test_split(e.left_id, e.right_id)) continue;
    if (e.left_words > config.max_words || e.right_words > config.max_words) continue;
    if (is_whole_part(e.label)) {
      whole_part.push_back(i);
    } else {
      sel.real.push_back(i);
    }
  }

  if (config.condition != Condition::AllFake) {
    std::size_t allowed = whole_part.size();
    if (config.whole_part_cap < 1.0) {
      const double share = config.whole_part_cap / (1.0 - config.whole_part_cap);
      allowed = static_cast<std::size_t>(std::floor(share * static_cast<double>(sel.real.size()) + 1e-9));
    }
    // Fixed hash order over unordered pairs; both directions are kept together.
    std::map<std::pair<std::uint64_t, std::string>, std::vector<std::size_t>> groups;
    for (auto i : whole_part) {
      const auto key = unordered_key(pools.real[i].left_id, pools.real[i].right_id);
      groups[{fnv1a64("whole-part:" + key), key}].push_back(i);
    }
    std::size_t taken = 0;
    for (const auto& [key, members] : groups) {
      if (taken + members.size() > allowed) continue;
      taken += members.size();
      sel.real.insert(sel.real.end(), members.begin(), members.end());
    }
    std::sort(sel.real.begin(), sel.real.end());
  }

  if (config.condition != Condition::NoFake && !pools.synthetic.empty()) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < pools.synthetic.size(); ++i) {
      const auto& e = pools.synthetic[i];
      if (e.left_words <= config.max_words && e.right_words <= config.max_words) order.push_back(i);
    }
    Rng rng(derive_seed(config.seed, 0x5E1EC7));
    rng.shuffle(std::span<std::size_t>(order));
    const auto n = static_cast<std::size_t>(std::floor(config.synth_fraction * static_cast<double>(order.size())));
    sel.synthetic.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(sel.synthetic.begin(), sel.synthetic.end());
  }
  return sel;
}

ConfusionMatrix evaluate(const ClassifierModel& model, std::span<const PairExample> examples) {
  ConfusionMatrix confusion(model.classes);
  for (const auto& e : examples) confusion.add(e.label, predict(model, e).label);
  return confusion;
}

ConditionReport run_condition(const ExperimentPools& pools, const ExperimentConfig& config) {
  const auto sel = select_training(pools, config);
  const auto classes = config.classes.empty() ? pool_classes(pools) : config.classes;

  std::vector<PairExample> train_set;
  train_set.reserve(sel.real.size() + sel.synthetic.size());
  ConditionReport report;
  for (auto i : sel.real) {
    train_set.push_back(pools.real[i]);
    if (is_whole_part(pools.real[i].label)) ++report.real_whole_part_train;
  }
  for (auto i : sel.synthetic) {
    train_set.push_back(pools.synthetic[i]);
    if (is_whole_part(pools.synthetic[i].label)) ++report.synthetic_whole_part_train;
  }
  if (train_set.empty()) throw ValidationError("run_condition: empty training set");

  std::vector<PairExample> test_set;
  for (auto i : test_indices(pools)) test_set.push_back(pools.real[i]);
  if (test_set.empty()) throw ValidationError("run_condition: empty test set");

  auto train_config = config.train;
  train_config.seed = config.seed;
  auto trained = train(train_set, classes, train_config);

  report.condition = config.condition;
  report.synth_fraction = config.condition == Condition::NoFake ? 0.0 : config.synth_fraction;
  report.seed = config.seed;
  report.real_train = sel.real.size();
  report.synthetic_train = sel.synthetic.size();
  report.test = test_set.size();
  report.confusion = evaluate(trained.model, test_set);
  report.metrics = compute_metrics(report.confusion);
  report.history = std::move(trained.history);
  report.model = std::move(trained.model);
  return report;
}

std::vector<ConditionReport> ratio_sweep(const ExperimentPools& pools, const ExperimentConfig& base,
                                         const SweepOptions& options) {
  for (double f : options.fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("sweep fractions must be in [0, 1]");
  }
  auto config = base;
  if (config.classes.empty()) config.classes = pool_classes(pools);
  std::vector<ConditionReport> out;
  for (double f : options.fractions) {
    config.condition = f == 0.0 ? Condition::NoFake : Condition::Mixed;
    config.synth_fraction = f;
    out.push_back(run_condition(pools, config));
  }
  if (options.include_allfake) {
    config.condition = Condition::AllFake;
    config.synth_fraction = 1.0;
    out.push_back(run_condition(pools, config));
  }
  return out;
}

namespace {

std::string fmt(double v) { return format_double(v); }

std::string macro_name(const MetricsReport& m) {
  std::string name = "macro:";
  for (std::size_t i = 0; i < m.macro_classes.size(); ++i) {
    if (i) name += '+';
    name += to_string(m.macro_classes[i]);
  }
  return name;
}

}  // namespace

void write_reports_tsv(const std::filesystem::path& path, std::span<const ConditionReport> reports) {
  std::string text =
      "condition\tfraction\tseed\treal_train\tsynthetic_train\treal_whole_part\tsynthetic_whole_part\tratio\t"
      "label\tprecision\trecall\tf1\tsupport\n";
  for (const auto& r : reports) {
    const std::string prefix = std::string(to_string(r.condition)) + "\t" + fmt(r.synth_fraction) + "\t" +
                               std::to_string(r.seed) + "\t" + std::to_string(r.real_train) + "\t" +
                               std::to_string(r.synthetic_train) + "\t" + std::to_string(r.real_whole_part_train) +
                               "\t" + std::to_string(r.synthetic_whole_part_train) + "\t" +
                               fmt(r.synthetic_real_ratio()) + "\t";
    for (const auto& c : r.metrics.per_class) {
      text += prefix + std::string(to_string(c.label)) + "\t" + fmt(c.precision) + "\t" + fmt(c.recall) + "\t" +
              fmt(c.f1) + "\t" + std::to_string(c.support) + "\n";
    }
    const auto& m = r.metrics;
    std::size_t macro_support = 0;
    for (auto l : m.macro_classes) macro_support += m.find(l)->support;
    text += prefix + macro_name(m) + "\t" + fmt(m.macro_precision) + "\t" + fmt(m.macro_recall) + "\t" +
            fmt(m.macro_f1) + "\t" + std::to_string(macro_support) + "\n";
    text += prefix + "micro\t" + fmt(m.micro_precision) + "\t" + fmt(m.micro_recall) + "\t" + fmt(m.micro_f1) +
            "\t" + std::to_string(m.total) + "\n";
  }
  write_file_atomic(path, text);
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const ConditionReport> reports) {
  std::string text = "condition,fraction,ratio";
  if (!reports.empty()) {
    for (const auto& c : reports.front().metrics.per_class) {
      const std::string l(to_string(c.label));
      text += "," + l + "_precision," + l + "_recall," + l + "_f1";
    }
  }
  text += ",macro_precision,macro_recall,macro_f1,micro_f1\n";
  for (const auto& r : reports) {
    text += std::string(to_string(r.condition)) + "," + fmt(r.synth_fraction) + "," + fmt(r.synthetic_real_ratio());
    for (const auto& c : r.metrics.per_class) {
      text += "," + fmt(c.precision) + "," + fmt(c.recall) + "," + fmt(c.f1);
    }
    text += "," + fmt(r.metrics.macro_precision) + "," + fmt(r.metrics.macro_recall) + "," +
            fmt(r.metrics.macro_f1) + "," + fmt(r.metrics.micro_f1) + "\n";
  }
  write_file_atomic(path, text);
}

std::string summarize(std::span<const ConditionReport> reports) {
  std::string out;
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line,
                  "%-8s fraction=%.2f ratio=%s train=%zu+%zu test=%zu  whole-part P=%.3f R=%.3f F1=%.3f  "
                  "micro-F1=%.3f\n",
                  std::string(to_string(r.condition)).c_str(), r.synth_fraction, fmt(r.synthetic_real_ratio()).c_str(),
                  r.real_train, r.synthetic_train, r.test, r.metrics.macro_precision, r.metrics.macro_recall,
                  r.metrics.macro_f1, r.metrics.micro_f1);
    out += line;
  }
  return out;
}

std::vector<OverlapRow> surface_overlaps(const ClassifierModel& model, std::span<const PairExample> examples,
                                         std::size_t top_k) {
  const auto idx = model.class_index(RelationshipLabel::OVERLAPS);
  if (!idx) throw ValidationError("surface_overlaps: model was not trained with an OVERLAPS class");
  std::vector<OverlapRow> rows;
  rows.reserve(examples.size());
  for (const auto& e : examples) {
    rows.push_back({e.label, e.left_id, e.right_id, predict(model, e).probabilities[*idx]});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const OverlapRow& a, const OverlapRow& b) { return a.confidence > b.confidence; });
  if (rows.size() > top_k) rows.resize(top_k);
  return rows;
}

void write_overlap_report(const std::filesystem::path& path, std::span<const OverlapRow> rows) {
  std::string text = "rank\tground_truth\tleft_id\tright_id\tconfidence\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += std::to_string(i + 1) + "\t" + std::string(to_string(rows[i].ground_truth)) + "\t" + rows[i].left_id +
            "\t" + rows[i].right_id + "\t" + fmt(rows[i].confidence) + "\n";
  }
  write_file_atomic(path, text);
}

}  // namespace bookrel
