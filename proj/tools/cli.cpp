#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>

#include "bookrel/corpus.hpp"
#include "bookrel/demo.hpp"
#include "bookrel/embed.hpp"
#include "bookrel/enumparse.hpp"
#include "bookrel/experiment.hpp"
#include "bookrel/nn.hpp"
#include "bookrel/simmat.hpp"
#include "bookrel/synth.hpp"
#include "bookrel/tsv.hpp"

namespace bookrel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad flag values found after parsing; reported like parse errors (exit 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

void note(const std::string& text) { std::cerr << text << '\n'; }

/// Written next to every command's outputs. Wall time is only recorded on
/// request so that repeated runs produce identical files.
struct RunManifest {
  std::string command;
  json config = json::object();
  json seeds = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  void write(const fs::path& path, std::optional<double> wall_seconds) const {
    json j;
    j["command"] = command;
    j["tool_version"] = BOOKREL_VERSION;
    j["config"] = config;
    j["seeds"] = seeds;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    if (wall_seconds) j["wall_time_seconds"] = *wall_seconds;
    write_file_atomic(path, j.dump(2) + "\n");
  }
};

struct Common {
  std::uint64_t seed = 1;
  int threads = 1;
  bool record_time = false;
};

fs::path manifest_beside(const fs::path& file) { return fs::path(file.string() + ".run.json"); }

std::vector<RelationshipLabel> parse_label_list(const std::string& text) {
  std::vector<RelationshipLabel> out;
  for (const auto& part : split(text, ',')) {
    if (!part.empty()) out.push_back(parse_label(part));
  }
  return out;
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) continue;
    const double f = parse_double(part);
    if (!(f >= 0.0 && f <= 1.0)) throw UsageError("--fractions: " + part + " is outside [0, 1]");
    out.push_back(f);
  }
  if (out.empty()) throw UsageError("--fractions: no values given");
  return out;
}

// ---- gen-demo-corpus ------------------------------------------------------

struct GenDemoOptions {
  fs::path out;
  DemoConfig demo;
};

void run_gen_demo(const GenDemoOptions& o, const Common& c, RunManifest& m) {
  auto config = o.demo;
  config.seed = c.seed;
  const auto corpus = generate_demo_corpus(config);
  fs::create_directories(o.out / "books");
  std::vector<ManifestEntry> entries;
  for (const auto& b : corpus.books) {
    const fs::path rel = fs::path("books") / (file_stem_for_id(b.id) + ".json");
    save_book(b, o.out / rel);
    entries.push_back({b.id, rel, book_word_count(b)});
  }
  write_manifest(o.out / "corpus-manifest.tsv", entries);
  write_catalog(o.out / "catalog.tsv", corpus.books);
  save_embeddings(corpus.embeddings, o.out / "embeddings.txt");
  std::vector<LabeledPair> planted;
  for (const auto& p : corpus.planted) planted.push_back({p.left_id, p.right_id, p.catalog_label, Provenance::Real});
  write_labels(o.out / "planted.tsv", planted, false);

  m.config = {{"multi_volume_works", config.multi_volume_works},
              {"volumes_per_work", config.volumes_per_work},
              {"copies_per_volume", config.copies_per_volume},
              {"single_works", config.single_works},
              {"planted_overlaps", config.planted_overlaps},
              {"dimension", config.dimension},
              {"cluster_weight", config.cluster_weight}};
  m.outputs = {"books/", "corpus-manifest.tsv", "catalog.tsv", "embeddings.txt", "planted.tsv"};
  note("wrote " + std::to_string(corpus.books.size()) + " books to " + o.out.string());
}

// ---- ingest ---------------------------------------------------------------

struct IngestOptions {
  fs::path in;
  fs::path out;
};

void run_ingest(const IngestOptions& o, RunManifest& m) {
  if (!fs::is_directory(o.in)) throw Error("ingest: " + o.in.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(o.in)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  const fs::path base = fs::absolute(o.out).parent_path();
  std::vector<ManifestEntry> entries;
  std::set<std::string> ids;
  for (const auto& f : files) {
    const auto book = load_book(f);
    book.validate();
    if (!ids.insert(book.id).second) throw ValidationError("ingest: duplicate book id '" + book.id + "' in " + f.string());
    entries.push_back({book.id, fs::absolute(f).lexically_relative(base), book_word_count(book)});
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (!o.out.parent_path().empty()) fs::create_directories(o.out.parent_path());
  write_manifest(o.out, entries);
  m.inputs = {o.in.string()};
  m.outputs = {o.out.string()};
  note("ingested " + std::to_string(entries.size()) + " books");
}

// ---- infer-labels ---------------------------------------------------------

struct InferOptions {
  fs::path catalog;
  fs::path out;
  std::size_t diff = 0;
};

void run_infer(const InferOptions& o, const Common& c, RunManifest& m) {
  const auto catalog = read_catalog(o.catalog.string());
  const auto relations = infer_relations(catalog);
  auto pairs = to_labeled_pairs(relations);
  if (o.diff > 0) {
    // Only ids and work keys matter for DIFF sampling.
    std::vector<Book> stubs;
    for (const auto& e : catalog) {
      Book b;
      b.id = e.book_id;
      b.metadata.work_key = e.work_key;
      stubs.push_back(std::move(b));
    }
    const auto diff = sample_diff_pairs(stubs, o.diff, c.seed);
    pairs.insert(pairs.end(), diff.begin(), diff.end());
  }
  if (!o.out.parent_path().empty()) fs::create_directories(o.out.parent_path());
  write_labels(o.out, pairs, false);
  std::map<RelationshipLabel, std::size_t> counts;
  for (const auto& p : pairs) ++counts[p.label];
  std::string summary = "labels:";
  for (const auto& [l, n] : counts) summary += " " + std::string(to_string(l)) + "=" + std::to_string(n);
  note(summary);
  m.config = {{"diff", o.diff}};
  m.seeds = {{"diff", c.seed}};
  m.inputs = {o.catalog.string()};
  m.outputs = {o.out.string()};
}

// ---- synthesize -----------------------------------------------------------

struct SynthOptions {
  fs::path corpus;
  fs::path out;
  std::string kinds = "anthology,combined,split,overlap";
  std::size_t count = 0;
  std::string counts;
  bool no_dedup = false;
  double short_quantile = 0.4;
};

SynthesisPlan make_plan(const SynthOptions& o, std::uint64_t seed) {
  SynthesisPlan plan;
  plan.seed = seed;
  plan.dedup = !o.no_dedup;
  plan.short_quantile = o.short_quantile;
  if (!o.counts.empty()) {
    for (const auto& item : split(o.counts, ',')) {
      const auto kv = split(item, '=');
      if (kv.size() != 2) throw UsageError("--counts: expected kind=N, got '" + item + "'");
      std::size_t n = 0;
      try {
        n = std::stoul(kv[1]);
      } catch (const std::exception&) {
        throw UsageError("--counts: bad count in '" + item + "'");
      }
      plan.counts[parse_synth_kind(kv[0])] = n;
    }
  } else {
    if (o.count == 0) throw UsageError("synthesize: give --count N or --counts kind=N,...");
    for (const auto& k : split(o.kinds, ',')) {
      if (!k.empty()) plan.counts[parse_synth_kind(k)] = o.count;
    }
  }
  return plan;
}

void run_synthesize(const SynthOptions& o, const Common& c, RunManifest& m) {
  SynthesisPlan plan;
  try {
    plan = make_plan(o, c.seed);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  const auto corpus = load_corpus(o.corpus);
  const auto books = synthesize(corpus, plan);
  fs::create_directories(o.out / "books");
  std::vector<ManifestEntry> entries;
  std::vector<LabeledPair> labels;
  for (const auto& s : books) {
    const fs::path rel = fs::path("books") / (file_stem_for_id(s.book.id) + ".json");
    save_synth_book(s, o.out / rel);
    entries.push_back({s.book.id, rel, book_word_count(s.book)});
    const auto pairs = synth_pair_labels(s);
    labels.insert(labels.end(), pairs.begin(), pairs.end());
  }
  write_manifest(o.out / "synth-manifest.tsv", entries);
  write_labels(o.out / "synth-labels.tsv", labels, true);
  json counts = json::object();
  for (const auto& [k, n] : plan.counts) counts[std::string(to_string(k))] = n;
  m.config = {{"counts", counts}, {"dedup", plan.dedup}, {"short_quantile", plan.short_quantile}};
  m.seeds = {{"synthesis", c.seed}};
  m.inputs = {o.corpus.string()};
  m.outputs = {"books/", "synth-manifest.tsv", "synth-labels.tsv"};
  note("synthesized " + std::to_string(books.size()) + " books, " + std::to_string(labels.size()) + " labeled pairs");
}

// ---- featurize ------------------------------------------------------------

struct FeaturizeCliOptions {
  fs::path corpus;
  fs::path synth;
  std::vector<fs::path> pairs;
  fs::path embeddings;
  std::size_t chunk_size = kDefaultChunkWords;
  std::size_t matrix_size = kDefaultMatrixSize;
  fs::path out;
};

void run_featurize(const FeaturizeCliOptions& o, RunManifest& m) {
  auto books = load_corpus(o.corpus);
  if (!o.synth.empty()) {
    const auto manifest = o.synth / "synth-manifest.tsv";
    for (const auto& e : read_manifest(manifest)) {
      const auto path = e.path.is_absolute() ? e.path : o.synth / e.path;
      books.push_back(load_synth_book(path).book);
    }
  }
  const auto table = load_embeddings(o.embeddings);
  std::vector<LabeledPair> pairs;
  for (const auto& p : o.pairs) {
    const auto part = read_labels(p);
    pairs.insert(pairs.end(), part.begin(), part.end());
  }
  const auto index = index_books(books);
  const auto examples = featurize_pairs(pairs, index, table, {o.chunk_size, o.matrix_size});
  write_feature_set(o.out, examples);
  m.config = {{"chunk_size", o.chunk_size}, {"matrix_size", o.matrix_size}};
  m.inputs = {o.corpus.string(), o.embeddings.string()};
  if (!o.synth.empty()) m.inputs.push_back(o.synth.string());
  for (const auto& p : o.pairs) m.inputs.push_back(p.string());
  m.outputs = {"features-manifest.tsv", "matrices/"};
  note("featurized " + std::to_string(examples.size()) + " pairs");
}

// ---- shared experiment settings -------------------------------------------

/// Training and experiment settings; JSON config values are applied first,
/// then any flags given on the command line.
struct ExperimentFlags {
  fs::path config;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> learning_rate, whole_part_cap, synth_fraction;
  std::optional<std::uint64_t> max_words;
  std::optional<std::string> condition, classes;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--config", f.config, "JSON file with training settings")->check(CLI::ExistingFile);
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--batch-size", f.batch_size, "Mini-batch size");
  cmd->add_option("--learning-rate", f.learning_rate, "Adam learning rate");
  cmd->add_option("--whole-part-cap", f.whole_part_cap,
                  "Max share of real PARTOF/CONTAINS pairs among real training pairs");
  cmd->add_option("--max-words", f.max_words, "Books longer than this are excluded from training");
  cmd->add_option("--classes", f.classes, "Comma-separated class list (default: labels present)");
}

ExperimentConfig load_experiment_config(const ExperimentFlags& f, std::uint64_t seed) {
  ExperimentConfig config;
  config.seed = seed;
  if (!f.config.empty()) {
    json j;
    try {
      std::ifstream in(f.config);
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError(f.config.string() + ": " + e.what());
    }
    static const std::set<std::string> known = {
        "epochs",         "batch_size",   "learning_rate", "dropout_conv",  "dropout_pair",   "class_weights",
        "whole_part_cap", "synth_fraction", "condition",   "max_words",     "classes",        "architecture"};
    try {
      for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw UsageError(f.config.string() + ": unknown key '" + key + "'");
      }
      auto& t = config.train;
      t.epochs = j.value("epochs", t.epochs);
      t.batch_size = j.value("batch_size", t.batch_size);
      t.learning_rate = j.value("learning_rate", t.learning_rate);
      t.dropout.conv = j.value("dropout_conv", t.dropout.conv);
      t.dropout.pair = j.value("dropout_pair", t.dropout.pair);
      config.whole_part_cap = j.value("whole_part_cap", config.whole_part_cap);
      config.synth_fraction = j.value("synth_fraction", config.synth_fraction);
      config.max_words = j.value("max_words", config.max_words);
      if (j.contains("condition")) config.condition = parse_condition(j["condition"].get<std::string>());
      if (j.contains("classes")) {
        for (const auto& l : j["classes"]) config.classes.push_back(parse_label(l.get<std::string>()));
      }
      if (j.contains("architecture")) {
        const auto& a = j["architecture"];
        auto& s = t.architecture;
        s.conv1_filters = a.value("conv1_filters", s.conv1_filters);
        s.conv2_filters = a.value("conv2_filters", s.conv2_filters);
        s.kernel = a.value("kernel", s.kernel);
        s.pair_hidden = a.value("pair_hidden", s.pair_hidden);
        s.merge_hidden = a.value("merge_hidden", s.merge_hidden);
      }
      if (j.contains("class_weights")) {
        // Resolved against the class list once it is known.
        for (const auto& [label, w] : j["class_weights"].items()) {
          parse_label(label);
          if (!w.is_number()) throw ParseError("class_weights: weight for " + label + " is not a number");
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(f.config.string() + ": " + e.what());
    }
  }
  if (f.epochs) config.train.epochs = *f.epochs;
  if (f.batch_size) config.train.batch_size = *f.batch_size;
  if (f.learning_rate) config.train.learning_rate = *f.learning_rate;
  if (f.whole_part_cap) config.whole_part_cap = *f.whole_part_cap;
  if (f.synth_fraction) config.synth_fraction = *f.synth_fraction;
  if (f.max_words) config.max_words = *f.max_words;
  if (f.condition) config.condition = parse_condition(*f.condition);
  if (f.classes) config.classes = parse_label_list(*f.classes);
  if (config.condition == Condition::NoFake && !f.synth_fraction) config.synth_fraction = 0.0;
  return config;
}

/// Class weights from the config file, aligned with `classes` (missing: 1).
std::vector<double> class_weights_for(const fs::path& config_path, const std::vector<RelationshipLabel>& classes) {
  if (config_path.empty()) return {};
  std::ifstream in(config_path);
  const auto j = json::parse(in);
  if (!j.contains("class_weights")) return {};
  std::vector<double> w(classes.size(), 1.0);
  for (const auto& [label, value] : j["class_weights"].items()) {
    const auto l = parse_label(label);
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] == l) w[i] = value.get<double>();
    }
  }
  return w;
}

json config_to_json(const ExperimentConfig& c) {
  json classes = json::array();
  for (auto l : c.classes) classes.push_back(std::string(to_string(l)));
  return {{"condition", std::string(to_string(c.condition))},
          {"synth_fraction", c.synth_fraction},
          {"whole_part_cap", c.whole_part_cap},
          {"max_words", c.max_words},
          {"classes", classes},
          {"epochs", c.train.epochs},
          {"batch_size", c.train.batch_size},
          {"learning_rate", c.train.learning_rate},
          {"dropout_conv", c.train.dropout.conv},
          {"dropout_pair", c.train.dropout.pair}};
}

ExperimentPools pools_from_features(const std::vector<fs::path>& dirs) {
  ExperimentPools pools;
  for (const auto& d : dirs) {
    for (auto& e : read_feature_set(d)) {
      (e.provenance == Provenance::Synthetic ? pools.synthetic : pools.real).push_back(std::move(e));
    }
  }
  return pools;
}

// Keeps only examples whose (left, right) pair appears in one of the label files,
// taking the label and provenance from the label file.
void restrict_to_labels(ExperimentPools& pools, const std::vector<fs::path>& label_files) {
  if (label_files.empty()) return;
  std::map<std::pair<std::string, std::string>, LabeledPair> wanted;
  for (const auto& f : label_files) {
    for (auto& p : read_labels(f)) wanted[{p.left_id, p.right_id}] = p;
  }
  ExperimentPools out;
  for (auto* pool : {&pools.real, &pools.synthetic}) {
    for (auto& e : *pool) {
      const auto it = wanted.find({e.left_id, e.right_id});
      if (it == wanted.end()) continue;
      e.label = it->second.label;
      e.provenance = it->second.provenance;
      (e.provenance == Provenance::Synthetic ? out.synthetic : out.real).push_back(std::move(e));
    }
  }
  pools = std::move(out);
}

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  std::vector<fs::path> features;
  std::vector<std::string> labels;
  fs::path out;
  std::string split = "train";
  ExperimentFlags flags;
};

std::vector<fs::path> expand_label_args(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& a : args) {
    for (const auto& part : split(a, '+')) {
      if (!part.empty()) out.emplace_back(part);
    }
  }
  return out;
}

void run_train(const TrainOptions& o, const Common& c, RunManifest& m) {
  if (o.split != "train" && o.split != "all") throw UsageError("--split must be 'train' or 'all'");
  auto config = load_experiment_config(o.flags, c.seed);
  auto pools = pools_from_features(o.features);
  restrict_to_labels(pools, expand_label_args(o.labels));
  if (config.classes.empty()) config.classes = pool_classes(pools);
  config.train.class_weights = class_weights_for(o.flags.config, config.classes);
  config.train.seed = c.seed;
  config.validate();

  std::vector<PairExample> train_set;
  if (o.split == "all") {
    for (const auto& e : pools.real) {
      if (e.left_words <= config.max_words && e.right_words <= config.max_words) train_set.push_back(e);
    }
    if (config.condition != Condition::NoFake) {
      for (const auto& e : pools.synthetic) train_set.push_back(e);
    }
  } else {
    const auto sel = select_training(pools, config);
    for (auto i : sel.real) train_set.push_back(pools.real[i]);
    for (auto i : sel.synthetic) train_set.push_back(pools.synthetic[i]);
  }
  note("training on " + std::to_string(train_set.size()) + " pairs");
  const auto result = train(train_set, config.classes, config.train);
  for (const auto& h : result.history) {
    note("epoch " + std::to_string(h.epoch) + " loss " + format_double(h.mean_loss) + " accuracy " +
         format_double(h.accuracy));
  }
  if (!o.out.parent_path().empty()) fs::create_directories(o.out.parent_path());
  save_model(result.model, o.out);
  m.config = config_to_json(config);
  m.config["split"] = o.split;
  m.config["train_examples"] = train_set.size();
  m.seeds = {{"train", c.seed}};
  for (const auto& f : o.features) m.inputs.push_back(f.string());
  for (const auto& l : o.labels) m.inputs.push_back(l);
  m.outputs = {o.out.string()};
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateOptions {
  fs::path model;
  std::vector<fs::path> features;
  std::vector<std::string> labels;
  fs::path out;
  std::string split = "test";
};

std::vector<PairExample> evaluation_set(const std::vector<fs::path>& features, const std::vector<std::string>& labels,
                                        const std::string& split_name) {
  if (split_name != "test" && split_name != "all") throw UsageError("--split must be 'test' or 'all'");
  auto pools = pools_from_features(features);
  restrict_to_labels(pools, expand_label_args(labels));
  std::vector<PairExample> out;
  for (auto& e : pools.real) {
    if (split_name == "all" || in_test_split(e.left_id, e.right_id)) out.push_back(std::move(e));
  }
  return out;
}

void run_evaluate(const EvaluateOptions& o, RunManifest& m) {
  const auto model = load_model(o.model);
  const auto examples = evaluation_set(o.features, o.labels, o.split);
  if (examples.empty()) throw ValidationError("evaluate: no real pairs in the " + o.split + " split");
  for (const auto& e : examples) {
    if (!model.class_index(e.label)) {
      throw ValidationError("evaluate: label " + std::string(to_string(e.label)) + " of pair " + e.left_id + " / " +
                            e.right_id + " is not a model class");
    }
  }
  ConditionReport report;
  report.confusion = evaluate(model, examples);
  report.metrics = compute_metrics(report.confusion);
  report.test = examples.size();
  fs::create_directories(o.out);
  std::vector<ConditionReport> reports{std::move(report)};
  write_reports_tsv(o.out / "metrics.tsv", reports);

  const auto& cm = reports[0].confusion;
  std::string text = "true\\predicted";
  for (auto l : cm.classes()) text += "\t" + std::string(to_string(l));
  text += "\n";
  for (std::size_t t = 0; t < cm.classes().size(); ++t) {
    text += std::string(to_string(cm.classes()[t]));
    for (std::size_t p = 0; p < cm.classes().size(); ++p) text += "\t" + std::to_string(cm.count(t, p));
    text += "\n";
  }
  write_file_atomic(o.out / "confusion.tsv", text);
  const auto& mr = reports[0].metrics;
  std::string summary;
  for (const auto& cmx : mr.per_class) {
    char line[160];
    std::snprintf(line, sizeof line, "%-9s P=%.3f R=%.3f F1=%.3f n=%zu\n", std::string(to_string(cmx.label)).c_str(),
                  cmx.precision, cmx.recall, cmx.f1, cmx.support);
    summary += line;
  }
  char line[200];
  std::snprintf(line, sizeof line, "whole-part macro P=%.3f R=%.3f F1=%.3f; micro F1=%.3f over %zu pairs\n",
                mr.macro_precision, mr.macro_recall, mr.macro_f1, mr.micro_f1, mr.total);
  summary += line;
  write_file_atomic(o.out / "summary.txt", summary);
  std::cerr << summary;
  m.config = {{"split", o.split}};
  m.inputs = {o.model.string()};
  for (const auto& f : o.features) m.inputs.push_back(f.string());
  m.outputs = {"metrics.tsv", "confusion.tsv", "summary.txt"};
}

// ---- sweep ----------------------------------------------------------------

struct SweepCliOptions {
  std::vector<fs::path> features;
  std::string fractions = "0,0.05,0.1,0.25,0.5,0.75,1.0";
  bool allfake = false;
  fs::path out = "sweep-out";
  ExperimentFlags flags;
};

void run_sweep(const SweepCliOptions& o, const Common& c, RunManifest& m) {
  SweepOptions sweep{parse_fractions(o.fractions), o.allfake};
  auto config = load_experiment_config(o.flags, c.seed);
  ExperimentPools pools;
  if (o.features.empty()) {
    note("no --features given: generating the demo corpus in memory");
    auto demo = DemoExperimentOptions::defaults();
    demo.seed = c.seed;
    pools = std::move(build_demo_experiment(demo).pools);
    if (!o.flags.whole_part_cap) config.whole_part_cap = 0.015;
    m.config["source"] = "demo";
  } else {
    pools = pools_from_features(o.features);
    for (const auto& f : o.features) m.inputs.push_back(f.string());
  }
  if (config.classes.empty()) config.classes = pool_classes(pools);
  config.train.class_weights = class_weights_for(o.flags.config, config.classes);
  const auto reports = ratio_sweep(pools, config, sweep);
  fs::create_directories(o.out);
  write_reports_tsv(o.out / "sweep.tsv", reports);
  write_sweep_csv(o.out / "sweep.csv", reports);
  const auto summary = summarize(reports);
  write_file_atomic(o.out / "summary.txt", summary);
  std::cerr << summary;
  m.config.update(config_to_json(config));
  m.config["fractions"] = sweep.fractions;
  m.config["allfake"] = sweep.include_allfake;
  m.seeds = {{"experiment", c.seed}};
  m.outputs = {"sweep.tsv", "sweep.csv", "summary.txt"};
}

// ---- surface-overlaps -----------------------------------------------------

struct SurfaceOptions {
  fs::path model;
  std::vector<fs::path> features;
  std::vector<std::string> labels;
  std::size_t top_k = 50;
  std::string split = "all";
  fs::path out;
};

void run_surface(const SurfaceOptions& o, RunManifest& m) {
  const auto model = load_model(o.model);
  const auto examples = evaluation_set(o.features, o.labels, o.split);
  const auto rows = surface_overlaps(model, examples, o.top_k);
  if (!o.out.parent_path().empty()) fs::create_directories(o.out.parent_path());
  write_overlap_report(o.out, rows);
  m.config = {{"top_k", o.top_k}, {"split", o.split}};
  m.inputs = {o.model.string()};
  for (const auto& f : o.features) m.inputs.push_back(f.string());
  m.outputs = {o.out.string()};
  note("ranked " + std::to_string(examples.size()) + " pairs, wrote top " + std::to_string(rows.size()));
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Book relationship classification with synthetic training data", "bookrel"};
  app.set_version_flag("--version", BOOKREL_VERSION);
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* cmd, bool seeded) {
    if (seeded) cmd->add_option("--seed", common.seed, "Seed for all randomness")->capture_default_str();
    cmd->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_flag("--record-time", common.record_time, "Record wall time in the run manifest");
  };

  GenDemoOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-demo-corpus", "Generate a deterministic toy corpus");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--works", gen.demo.multi_volume_works, "Multi-volume works")->capture_default_str();
  gen_cmd->add_option("--volumes", gen.demo.volumes_per_work, "Volumes per work")->capture_default_str();
  gen_cmd->add_option("--copies", gen.demo.copies_per_volume, "Copies per volume")->capture_default_str();
  gen_cmd->add_option("--singles", gen.demo.single_works, "Single-volume works")->capture_default_str();
  gen_cmd->add_option("--planted", gen.demo.planted_overlaps, "Planted overlapping pairs")->capture_default_str();
  gen_cmd->add_option("--dimension", gen.demo.dimension, "Embedding dimension")->capture_default_str();
  add_common(gen_cmd, true);

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Index a directory of book JSON files");
  ingest_cmd->add_option("--in", ingest.in, "Directory of book files")->required();
  ingest_cmd->add_option("--out", ingest.out, "Manifest TSV to write")->required();
  add_common(ingest_cmd, false);

  InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer-labels", "Derive relationship labels from volume enumerations");
  infer_cmd->add_option("--catalog", infer.catalog, "catalog.tsv")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--out", infer.out, "labels.tsv to write")->required();
  infer_cmd->add_option("--diff", infer.diff, "Also sample this many cross-work DIFF pairs")->capture_default_str();
  add_common(infer_cmd, true);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synthesize", "Build synthetic books from a corpus");
  synth_cmd->add_option("--corpus", synth.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--kinds", synth.kinds, "Kinds for --count")->capture_default_str();
  synth_cmd->add_option("--count", synth.count, "Books (or pairs) per kind");
  synth_cmd->add_option("--counts", synth.counts, "Per-kind counts, e.g. anthology=40,split=30");
  synth_cmd->add_flag("--no-dedup", synth.no_dedup, "Keep duplicate author/title books in the short pool");
  synth_cmd->add_option("--short-quantile", synth.short_quantile, "Length percentile for short books")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_common(synth_cmd, true);

  FeaturizeCliOptions feat;
  auto* feat_cmd = app.add_subcommand("featurize", "Compute similarity matrices and pair features");
  feat_cmd->add_option("--corpus", feat.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--synth", feat.synth, "Directory written by synthesize")->check(CLI::ExistingDirectory);
  feat_cmd->add_option("--pairs", feat.pairs, "Label TSV files (repeatable)")->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--embeddings", feat.embeddings, "Embedding text file")->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--chunk-size", feat.chunk_size, "Words per chunk")->check(CLI::PositiveNumber)->capture_default_str();
  feat_cmd->add_option("--matrix-size", feat.matrix_size, "Similarity matrix side")
      ->check(CLI::Range(std::size_t{16}, std::size_t{1024}))
      ->capture_default_str();
  feat_cmd->add_option("--out", feat.out, "Output directory")->required();
  add_common(feat_cmd, false);

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the relationship classifier");
  train_cmd->add_option("--features", tr.features, "Feature directories (repeatable)")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--labels", tr.labels, "Restrict to pairs in these label files ('a.tsv+b.tsv' or repeated)");
  train_cmd->add_option("--out", tr.out, "Model file to write")->required();
  train_cmd->add_option("--split", tr.split, "train: hold out the test split; all: use every pair")->capture_default_str();
  train_cmd->add_option("--condition", tr.flags.condition, "nofake, mixed or allfake");
  train_cmd->add_option("--synth-fraction", tr.flags.synth_fraction, "Share of synthetic pairs to use");
  add_experiment_flags(train_cmd, tr.flags);
  add_common(train_cmd, true);

  EvaluateOptions ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a model on held-out real pairs");
  eval_cmd->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--features", ev.features, "Feature directories")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--labels", ev.labels, "Restrict to pairs in these label files");
  eval_cmd->add_option("--split", ev.split, "test or all")->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Report directory")->required();
  add_common(eval_cmd, false);

  SweepCliOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train over a range of synthetic data fractions");
  sweep_cmd->add_option("--features", sw.features, "Feature directories (default: in-memory demo corpus)")
      ->check(CLI::ExistingDirectory);
  sweep_cmd->add_option("--fractions", sw.fractions, "Comma-separated fractions in [0, 1]")->capture_default_str();
  sweep_cmd->add_flag("--allfake", sw.allfake, "Add a run without real whole-part pairs");
  sweep_cmd->add_option("--out", sw.out, "Report directory")->capture_default_str();
  add_experiment_flags(sweep_cmd, sw.flags);
  add_common(sweep_cmd, true);

  SurfaceOptions so;
  auto* surf_cmd = app.add_subcommand("surface-overlaps", "Rank labeled pairs by OVERLAPS confidence");
  surf_cmd->add_option("--model", so.model, "Model trained with an OVERLAPS class")->required()->check(CLI::ExistingFile);
  surf_cmd->add_option("--features", so.features, "Feature directories")->required()->check(CLI::ExistingDirectory);
  surf_cmd->add_option("--labels", so.labels, "Restrict to pairs in these label files");
  surf_cmd->add_option("--split", so.split, "test or all")->capture_default_str();
  surf_cmd->add_option("--top-k", so.top_k, "Rows to report")->capture_default_str();
  surf_cmd->add_option("--out", so.out, "Report TSV")->required();
  add_common(surf_cmd, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << BOOKREL_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  omp_set_num_threads(common.threads);
  RunManifest manifest;
  manifest.command = cmd->get_name();
  std::string command_line = "bookrel";
  for (const auto& a : args) command_line += " " + a;
  const auto start = std::chrono::steady_clock::now();
  fs::path manifest_path;
  try {
    if (cmd == gen_cmd) {
      run_gen_demo(gen, common, manifest);
      manifest_path = gen.out / "run-manifest.json";
    } else if (cmd == ingest_cmd) {
      run_ingest(ingest, manifest);
      manifest_path = manifest_beside(ingest.out);
    } else if (cmd == infer_cmd) {
      run_infer(infer, common, manifest);
      manifest_path = manifest_beside(infer.out);
    } else if (cmd == synth_cmd) {
      run_synthesize(synth, common, manifest);
      manifest_path = synth.out / "run-manifest.json";
    } else if (cmd == feat_cmd) {
      run_featurize(feat, manifest);
      manifest_path = feat.out / "run-manifest.json";
    } else if (cmd == train_cmd) {
      run_train(tr, common, manifest);
      manifest_path = manifest_beside(tr.out);
    } else if (cmd == eval_cmd) {
      run_evaluate(ev, manifest);
      manifest_path = ev.out / "run-manifest.json";
    } else if (cmd == sweep_cmd) {
      run_sweep(sw, common, manifest);
      manifest_path = sw.out / "run-manifest.json";
    } else if (cmd == surf_cmd) {
      run_surface(so, manifest);
      manifest_path = manifest_beside(so.out);
    }
    manifest.config["command_line"] = command_line;
    manifest.config["threads"] = common.threads;
    std::optional<double> wall;
    if (common.record_time) wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.write(manifest_path, wall);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << cmd->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << cmd->get_name() << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace bookrel::cli
