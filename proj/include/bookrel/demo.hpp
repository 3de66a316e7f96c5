#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bookrel/corpus.hpp"
#include "bookrel/embed.hpp"
#include "bookrel/enumparse.hpp"
#include "bookrel/experiment.hpp"
#include "bookrel/label.hpp"
#include "bookrel/synth.hpp"

namespace bookrel {

/// Toy corpus parameters. Each work is one topic: a block of topic words
/// whose embeddings cluster around a shared center. Pages draw a token from
/// the current chapter's topic words with probability topic_probability,
/// otherwise from a shared background vocabulary.
struct DemoConfig {
  std::size_t multi_volume_works = 24;
  std::size_t volumes_per_work = 3;
  std::size_t copies_per_volume = 2;
  std::size_t single_works = 32;
  std::size_t planted_overlaps = 10;

  std::size_t volume_pages_min = 30, volume_pages_max = 45;
  std::size_t single_pages_min = 20, single_pages_max = 30;
  std::size_t planted_block_pages_min = 8, planted_block_pages_max = 14;
  std::size_t page_words_min = 120, page_words_max = 180;
  std::size_t chapter_pages_min = 4, chapter_pages_max = 10;

  std::size_t topic_words = 60;
  std::size_t chapter_words = 20;
  std::size_t background_words = 300;
  double topic_probability = 0.8;

  std::size_t dimension = 32;
  double cluster_weight = 0.15;  // topic center component of a topic word's vector
  double copy_keep_probability = 0.95;

  std::uint64_t seed = 1;

  void validate() const;
};

/// A deliberately planted pair whose content overlaps (a shared block plus
/// one private block each) while its catalog enumerations claim `catalog_label`.
struct PlantedPair {
  std::string left_id;
  std::string right_id;
  RelationshipLabel catalog_label = RelationshipLabel::SW;
};

struct DemoCorpus {
  std::vector<Book> books;  // ordered by id
  EmbeddingTable embeddings;
  std::vector<PlantedPair> planted;
};

inline constexpr std::string_view kPlantedWorkPrefix = "planted-";

bool is_planted(const Book& book);

/// Pure function of the config.
DemoCorpus generate_demo_corpus(const DemoConfig& config);

/// Catalog entries for books with a work_key, enumerations parsed leniently.
std::vector<CatalogEntry> catalog_from_books(std::span<const Book> books);

/// catalog.tsv rows (book_id, work_key, enumeration_raw) for books with a work_key.
void write_catalog(const std::filesystem::path& path, std::span<const Book> books);

struct DemoExperimentOptions {
  DemoConfig corpus;
  SynthesisPlan synthesis;  // seed is overwritten from `seed`
  std::size_t diff_pairs = 600;
  FeaturizeOptions features{1000, kDefaultMatrixSize};
  std::uint64_t seed = 1;

  /// Desk-scale defaults used by the sweep and the acceptance suite.
  static DemoExperimentOptions defaults();
};

/// A generated corpus with everything needed to run experiments on it.
/// Planted books are kept out of the label pools and the synthesis input;
/// `planted` holds their pairs featurized with the catalog's labels.
struct DemoExperiment {
  DemoCorpus corpus;
  std::vector<SynthBook> synthetic;
  ExperimentPools pools;
  std::vector<PairExample> planted;
};

DemoExperiment build_demo_experiment(const DemoExperimentOptions& options);

}  // namespace bookrel
