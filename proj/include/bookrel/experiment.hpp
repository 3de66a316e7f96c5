#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bookrel/corpus.hpp"
#include "bookrel/embed.hpp"
#include "bookrel/enumparse.hpp"
#include "bookrel/metrics.hpp"
#include "bookrel/nn.hpp"
#include "bookrel/simmat.hpp"

namespace bookrel {

enum class Condition : std::uint8_t { NoFake, Mixed, AllFake };

std::string_view to_string(Condition condition);
Condition parse_condition(std::string_view text);

inline constexpr std::uint64_t kMaxTrainingWords = 750000;

/// Books with more than `max_words` words are dropped; order is preserved.
std::vector<Book> filter_oversize(std::span<const Book> corpus, std::uint64_t max_words = kMaxTrainingWords);

/// Fixed 80/20 split on a hash of the unordered id pair, so both directions of
/// a pair always land on the same side.
bool in_test_split(std::string_view left_id, std::string_view right_id);

/// Ground-truth relations as real labeled pairs.
std::vector<LabeledPair> to_labeled_pairs(std::span<const GroundTruthRelation> relations);

/// `count` distinct unordered pairs of books from different works, uniformly
/// drawn by seed, each in a random direction, labeled DIFF. A book without a
/// work_key is its own work. Returns fewer when the corpus has fewer pairs.
std::vector<LabeledPair> sample_diff_pairs(std::span<const Book> books, std::size_t count, std::uint64_t seed);

struct FeaturizeOptions {
  std::size_t chunk_size = kDefaultChunkWords;
  std::size_t matrix_size = kDefaultMatrixSize;
};

/// Featurizes every pair; per-book chunk vectors are computed once. Throws
/// ValidationError naming the first id missing from `books`.
std::vector<PairExample> featurize_pairs(std::span<const LabeledPair> pairs,
                                         const std::unordered_map<std::string, const Book*>& books,
                                         const EmbeddingTable& table, const FeaturizeOptions& options);

std::unordered_map<std::string, const Book*> index_books(std::span<const Book> books);

/// Featurized real and synthetic examples for one corpus.
struct ExperimentPools {
  std::vector<PairExample> real;
  std::vector<PairExample> synthetic;
};

struct ExperimentConfig {
  Condition condition = Condition::Mixed;
  double synth_fraction = 1.0;  // share of the synthetic pool used
  std::uint64_t seed = 0;
  TrainConfig train;
  // Real whole-part pairs are capped at this share of the real training pairs.
  double whole_part_cap = 1.0;
  std::uint64_t max_words = kMaxTrainingWords;
  std::vector<RelationshipLabel> classes;  // empty: every label present in the pools

  void validate() const;
};

struct ConditionReport {
  Condition condition = Condition::Mixed;
  double synth_fraction = 0.0;
  std::uint64_t seed = 0;
  std::size_t real_train = 0;
  std::size_t real_whole_part_train = 0;
  std::size_t synthetic_train = 0;
  std::size_t synthetic_whole_part_train = 0;
  std::size_t test = 0;
  ConfusionMatrix confusion{{RelationshipLabel::DIFF}};
  MetricsReport metrics;
  std::vector<EpochStats> history;
  ClassifierModel model;

  /// Synthetic to real whole-part training examples; infinity when no real ones.
  double synthetic_real_ratio() const;
};

/// Labels present in either pool, in label order.
std::vector<RelationshipLabel> pool_classes(const ExperimentPools& pools);

/// The training set a condition uses. Real examples come from the training
/// side of the split (oversize books excluded, whole-part pairs capped by
/// hash order, or all dropped for allfake); synthetic examples are the first
/// floor(fraction * N) of a seeded permutation of the synthetic pool.
struct TrainingSelection {
  std::vector<std::size_t> real;
  std::vector<std::size_t> synthetic;
};
TrainingSelection select_training(const ExperimentPools& pools, const ExperimentConfig& config);

/// Indices of real examples on the test side of the split.
std::vector<std::size_t> test_indices(const ExperimentPools& pools);

/// Trains one condition and evaluates it on the held-out real pairs.
/// Throws ValidationError on an empty training or test set.
ConditionReport run_condition(const ExperimentPools& pools, const ExperimentConfig& config);

ConfusionMatrix evaluate(const ClassifierModel& model, std::span<const PairExample> examples);

struct SweepOptions {
  std::vector<double> fractions;
  bool include_allfake = false;
};

/// One mixed-condition run per fraction with the base config's seed; a
/// fraction of 0 is the nofake baseline. Optionally appends an allfake run
/// with the full synthetic pool.
std::vector<ConditionReport> ratio_sweep(const ExperimentPools& pools, const ExperimentConfig& base,
                                         const SweepOptions& options);

/// Long-format TSV: one row per run and class, plus macro and micro rows.
void write_reports_tsv(const std::filesystem::path& path, std::span<const ConditionReport> reports);
/// Wide CSV for plotting: fraction, ratio, then precision/recall/f1 per class.
void write_sweep_csv(const std::filesystem::path& path, std::span<const ConditionReport> reports);
std::string summarize(std::span<const ConditionReport> reports);

struct OverlapRow {
  RelationshipLabel ground_truth = RelationshipLabel::DIFF;
  std::string left_id;
  std::string right_id;
  double confidence = 0.0;
};

/// The top_k examples by OVERLAPS probability, highest first (input order
/// breaks ties). Throws ValidationError if the model has no OVERLAPS class.
std::vector<OverlapRow> surface_overlaps(const ClassifierModel& model, std::span<const PairExample> examples,
                                         std::size_t top_k);

void write_overlap_report(const std::filesystem::path& path, std::span<const OverlapRow> rows);

}  // namespace bookrel
