#include "bookrel/demo.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "bookrel/rng.hpp"
#include "bookrel/tsv.hpp"

namespace bookrel {

namespace {

using Counts = std::map<std::string, std::uint32_t>;

std::string padded(std::size_t n, int width = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, n);
  return buf;
}

std::string topic_word(std::size_t topic, std::size_t k) {
  return "t" + padded(topic, 3) + "w" + padded(k);
}

std::string background_word(std::size_t k) { return "bg" + padded(k, 3); }

Page to_page(const Counts& counts) {
  std::vector<TokenCount> tc;
  tc.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    if (count > 0) tc.push_back({token, count});
  }
  return Page::from_counts(std::move(tc));
}

class Generator {
 public:
  explicit Generator(const DemoConfig& c) : c_(c) {}

  Rng stream(std::string_view tag) const { return Rng(derive_seed(c_.seed, fnv1a64(tag))); }

  std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) const {
    return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
  }

  // Canonical page contents for one topic, organised in chapters that each
  // use a random subset of the topic's words.
  std::vector<Counts> content(std::size_t topic, std::size_t pages, Rng& rng) const {
    std::vector<Counts> out;
    std::vector<std::size_t> words(c_.topic_words);
    for (std::size_t i = 0; i < words.size(); ++i) words[i] = i;
    while (out.size() < pages) {
      rng.shuffle(std::span<std::size_t>(words));
      const std::size_t chapter = std::min(between(rng, c_.chapter_pages_min, c_.chapter_pages_max),
                                           pages - out.size());
      for (std::size_t p = 0; p < chapter; ++p) {
        Counts page;
        const std::size_t n = between(rng, c_.page_words_min, c_.page_words_max);
        for (std::size_t t = 0; t < n; ++t) {
          if (rng.bernoulli(c_.topic_probability)) {
            ++page[topic_word(topic, words[rng.uniform_index(c_.chapter_words)])];
          } else {
            ++page[background_word(rng.uniform_index(c_.background_words))];
          }
        }
        out.push_back(std::move(page));
      }
    }
    return out;
  }

  Counts matter_page(Rng& rng) const {
    Counts page;
    const std::size_t n = between(rng, 20, 80);
    for (std::size_t t = 0; t < n; ++t) ++page[background_word(rng.uniform_index(c_.background_words))];
    return page;
  }

  // A physical copy: its own front/back matter and thinned, lightly noised pages.
  std::vector<Page> render(const std::vector<const std::vector<Counts>*>& blocks, Rng& rng) const {
    std::vector<Page> pages;
    const std::size_t front = between(rng, 1, 6);
    for (std::size_t i = 0; i < front; ++i) pages.push_back(to_page(matter_page(rng)));
    for (const auto* block : blocks) {
      for (const auto& canonical : *block) {
        Counts page;
        for (const auto& [token, count] : canonical) {
          std::uint32_t kept = 0;
          for (std::uint32_t i = 0; i < count; ++i) kept += rng.bernoulli(c_.copy_keep_probability) ? 1 : 0;
          if (kept > 0) page[token] = kept;
        }
        const std::size_t extra = between(rng, 0, 3);
        for (std::size_t i = 0; i < extra; ++i) ++page[background_word(rng.uniform_index(c_.background_words))];
        if (page.empty()) ++page[background_word(0)];
        pages.push_back(to_page(page));
      }
    }
    const std::size_t back = between(rng, 1, 6);
    for (std::size_t i = 0; i < back; ++i) pages.push_back(to_page(matter_page(rng)));
    return pages;
  }

  Book book(std::string id, std::string title, std::string author, std::string work_key,
            std::optional<std::string> enumeration, const std::vector<const std::vector<Counts>*>& blocks) const {
    Book b;
    b.id = std::move(id);
    auto rng = stream("render:" + b.id);
    b.pages = render(blocks, rng);
    b.reindex();
    b.metadata.title = std::move(title);
    b.metadata.author = std::move(author);
    b.metadata.work_key = std::move(work_key);
    b.metadata.enumeration_raw = std::move(enumeration);
    return b;
  }

  std::string volume_text(std::size_t v, Rng& rng) const {
    static const char* formats[] = {"v.%zu", "v%zu", "volume %zu", "Vol. %zu", "V. %zu", "vol %zu", "v. %zu"};
    char buf[64];
    std::snprintf(buf, sizeof buf, formats[rng.uniform_index(std::size(formats))], v);
    return buf;
  }

  std::string range_text(std::size_t lo, std::size_t hi, Rng& rng) const {
    static const char* formats[] = {"v.%zu-%zu", "V. %zu - %zu", "vols. %zu-%zu", "v.%zu to %zu", "v%zu-%zu"};
    char buf[64];
    std::snprintf(buf, sizeof buf, formats[rng.uniform_index(std::size(formats))], lo, hi);
    return buf;
  }

  const DemoConfig& c_;
};

}  // namespace

void DemoConfig::validate() const {
  if (multi_volume_works + single_works == 0) throw ValidationError("demo corpus needs at least one work");
  if (volumes_per_work < 2 && multi_volume_works > 0) throw ValidationError("volumes_per_work must be >= 2");
  if (copies_per_volume < 1) throw ValidationError("copies_per_volume must be >= 1");
  if (multi_volume_works > 99 || single_works > 99 || planted_overlaps > 99 || volumes_per_work > 99) {
    throw ValidationError("demo corpus counts are limited to 99 per kind");
  }
  auto range_ok = [](std::size_t lo, std::size_t hi) { return lo >= 1 && lo <= hi; };
  if (!range_ok(volume_pages_min, volume_pages_max) || !range_ok(single_pages_min, single_pages_max) ||
      !range_ok(planted_block_pages_min, planted_block_pages_max) ||
      !range_ok(page_words_min, page_words_max) || !range_ok(chapter_pages_min, chapter_pages_max)) {
    throw ValidationError("demo corpus page/word ranges must satisfy 1 <= min <= max");
  }
  if (chapter_words < 1 || chapter_words > topic_words) {
    throw ValidationError("chapter_words must be in 1..topic_words");
  }
  if (background_words < 1) throw ValidationError("background_words must be >= 1");
  if (!(topic_probability >= 0.0 && topic_probability <= 1.0)) {
    throw ValidationError("topic_probability must be in [0, 1]");
  }
  if (!(copy_keep_probability > 0.0 && copy_keep_probability <= 1.0)) {
    throw ValidationError("copy_keep_probability must be in (0, 1]");
  }
  if (dimension < 1) throw ValidationError("dimension must be >= 1");
}

bool is_planted(const Book& book) {
  return book.metadata.work_key && book.metadata.work_key->starts_with(kPlantedWorkPrefix);
}

DemoCorpus generate_demo_corpus(const DemoConfig& config) {
  config.validate();
  Generator g(config);
  DemoCorpus out;

  const std::size_t planted_topic_base = config.multi_volume_works + config.single_works;
  const std::size_t topics = planted_topic_base + 3 * config.planted_overlaps;

  // Embeddings: topic words cluster around their topic's center.
  {
    auto rng = g.stream("embeddings");
    const std::size_t d = config.dimension;
    const double noise = 1.0 / std::sqrt(static_cast<double>(d));
    out.embeddings = EmbeddingTable(d);
    std::vector<float> v(d);
    for (std::size_t t = 0; t < topics; ++t) {
      std::vector<double> center(d);
      double norm = 0.0;
      for (auto& x : center) {
        x = rng.normal();
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < config.topic_words; ++k) {
        for (std::size_t i = 0; i < d; ++i) {
          v[i] = static_cast<float>(config.cluster_weight * center[i] / norm + noise * rng.normal());
        }
        out.embeddings.set(topic_word(t, k), v);
      }
    }
    for (std::size_t k = 0; k < config.background_words; ++k) {
      for (auto& x : v) x = static_cast<float>(noise * rng.normal());
      out.embeddings.set(background_word(k), v);
    }
  }

  for (std::size_t w = 0; w < config.multi_volume_works; ++w) {
    const std::string wk = "w" + padded(w);
    auto rng = g.stream("work:" + wk);
    std::vector<std::vector<Counts>> volumes;
    for (std::size_t v = 0; v < config.volumes_per_work; ++v) {
      volumes.push_back(g.content(w, g.between(rng, config.volume_pages_min, config.volume_pages_max), rng));
    }
    const std::string title = "Collected work " + padded(w);
    const std::string author = "Author " + padded(w);
    for (std::size_t v = 0; v < config.volumes_per_work; ++v) {
      for (std::size_t c = 0; c < config.copies_per_volume; ++c) {
        out.books.push_back(g.book(wk + "-v" + padded(v + 1) + "-c" + std::to_string(c + 1), title, author, wk,
                                   g.volume_text(v + 1, rng), {&volumes[v]}));
      }
    }
    // One book binding consecutive volumes together.
    const std::size_t lo = g.between(rng, 0, config.volumes_per_work - 2);
    const std::size_t hi = g.between(rng, lo + 1, config.volumes_per_work - 1);
    std::vector<const std::vector<Counts>*> blocks;
    for (std::size_t v = lo; v <= hi; ++v) blocks.push_back(&volumes[v]);
    out.books.push_back(g.book(wk + "-v" + padded(lo + 1) + "-" + padded(hi + 1), title, author, wk,
                               g.range_text(lo + 1, hi + 1, rng), blocks));
  }

  for (std::size_t s = 0; s < config.single_works; ++s) {
    const std::string key = "s" + padded(s);
    auto rng = g.stream("single:" + key);
    const auto pages = g.content(config.multi_volume_works + s,
                                 g.between(rng, config.single_pages_min, config.single_pages_max), rng);
    // Some records carry issue numbers or dates that are not volume enumerations.
    std::optional<std::string> note;
    switch (rng.uniform_index(4)) {
      case 0: note = "no. " + std::to_string(g.between(rng, 1, 40)); break;
      case 1: note = std::to_string(g.between(rng, 1850, 1925)); break;
      default: break;
    }
    out.books.push_back(g.book(key, "Short work " + padded(s), "Writer " + padded(s), key, note, {&pages}));
  }

  for (std::size_t k = 0; k < config.planted_overlaps; ++k) {
    const std::string key = std::string(kPlantedWorkPrefix) + padded(k);
    auto rng = g.stream("planted:" + key);
    std::vector<std::vector<Counts>> blocks;
    for (std::size_t b = 0; b < 3; ++b) {
      blocks.push_back(g.content(planted_topic_base + 3 * k + b,
                                 g.between(rng, config.planted_block_pages_min, config.planted_block_pages_max),
                                 rng));
    }
    // Shared block 0 plus a private block each, in random order.
    auto order = [&](std::size_t priv) {
      std::vector<const std::vector<Counts>*> v{&blocks[0], &blocks[priv]};
      if (rng.bernoulli(0.5)) std::swap(v[0], v[1]);
      return v;
    };
    const auto left_blocks = order(1);
    const auto right_blocks = order(2);
    PlantedPair pair;
    std::string left_enum, right_enum;
    switch (k % 3) {
      case 0:
        pair.catalog_label = RelationshipLabel::SW;
        left_enum = g.volume_text(1, rng);
        right_enum = g.volume_text(1, rng);
        break;
      case 1:
        pair.catalog_label = RelationshipLabel::CONTAINS;
        left_enum = g.range_text(1, 2, rng);
        right_enum = g.volume_text(2, rng);
        break;
      default:
        pair.catalog_label = RelationshipLabel::DV;
        left_enum = g.volume_text(1, rng);
        right_enum = g.volume_text(2, rng);
        break;
    }
    const std::string title = "Miscellany " + padded(k);
    const std::string author = "Editor " + padded(k);
    pair.left_id = key + "-a";
    pair.right_id = key + "-b";
    out.books.push_back(g.book(pair.left_id, title, author, key, left_enum, left_blocks));
    out.books.push_back(g.book(pair.right_id, title, author, key, right_enum, right_blocks));
    out.planted.push_back(pair);
  }

  std::sort(out.books.begin(), out.books.end(), [](const Book& a, const Book& b) { return a.id < b.id; });
  return out;
}

std::vector<CatalogEntry> catalog_from_books(std::span<const Book> books) {
  std::vector<CatalogEntry> out;
  for (const auto& b : books) {
    if (!b.metadata.work_key) continue;
    CatalogEntry e{b.id, *b.metadata.work_key, std::nullopt};
    if (b.metadata.enumeration_raw) {
      try {
        e.enumeration = read_enumeration(*b.metadata.enumeration_raw);
      } catch (const InvalidRangeError&) {
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_catalog(const std::filesystem::path& path, std::span<const Book> books) {
  std::string text = "book_id\twork_key\tenumeration_raw\n";
  for (const auto& b : books) {
    if (!b.metadata.work_key) continue;
    text += b.id + "\t" + *b.metadata.work_key + "\t" + b.metadata.enumeration_raw.value_or("") + "\n";
  }
  write_file_atomic(path, text);
}

DemoExperimentOptions DemoExperimentOptions::defaults() {
  DemoExperimentOptions o;
  o.synthesis.counts = {{SynthKind::Anthology, 40},
                        {SynthKind::Combined, 20},
                        {SynthKind::Split, 30},
                        {SynthKind::Overlap, 60}};
  return o;
}

DemoExperiment build_demo_experiment(const DemoExperimentOptions& options) {
  DemoExperiment ex;
  auto corpus_config = options.corpus;
  corpus_config.seed = derive_seed(options.seed, 1);
  ex.corpus = generate_demo_corpus(corpus_config);

  std::vector<Book> regular;
  for (const auto& b : ex.corpus.books) {
    if (!is_planted(b)) regular.push_back(b);
  }
  const auto relations = infer_relations(catalog_from_books(regular));
  auto real_labels = to_labeled_pairs(relations);
  const auto diff = sample_diff_pairs(regular, options.diff_pairs, derive_seed(options.seed, 2));
  real_labels.insert(real_labels.end(), diff.begin(), diff.end());

  auto plan = options.synthesis;
  plan.seed = derive_seed(options.seed, 3);
  ex.synthetic = synthesize(regular, plan);
  std::vector<LabeledPair> synth_labels;
  for (const auto& s : ex.synthetic) {
    const auto pairs = synth_pair_labels(s);
    synth_labels.insert(synth_labels.end(), pairs.begin(), pairs.end());
  }

  auto index = index_books(ex.corpus.books);
  for (const auto& s : ex.synthetic) index.emplace(s.book.id, &s.book);
  ex.pools.real = featurize_pairs(real_labels, index, ex.corpus.embeddings, options.features);
  ex.pools.synthetic = featurize_pairs(synth_labels, index, ex.corpus.embeddings, options.features);

  std::vector<LabeledPair> planted;
  for (const auto& p : ex.corpus.planted) {
    planted.push_back({p.left_id, p.right_id, p.catalog_label, Provenance::Real});
  }
  ex.planted = featurize_pairs(planted, index, ex.corpus.embeddings, options.features);
  return ex;
}

}  // namespace bookrel
