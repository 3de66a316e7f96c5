#include "bookrel/synth.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>

#include "bookrel/enumparse.hpp"
#include "bookrel/tsv.hpp"

namespace bookrel {

namespace {

constexpr std::array<std::string_view, 4> kKindNames = {"anthology", "combined", "split",
                                                        "overlap"};

constexpr std::size_t kMinAnthologyParts = 2;
constexpr std::size_t kMaxAnthologyParts = 5;
constexpr std::size_t kMinSplitParts = 2;
constexpr std::size_t kMaxSplitParts = 4;

std::string synth_id(SynthKind kind, std::uint64_t seed, std::size_t n) {
  return "synth:" + std::string(to_string(kind)) + ":" + std::to_string(seed) + ":" +
         std::to_string(n);
}

Book make_book(std::string id, std::string title, std::vector<Page> pages) {
  Book b;
  b.id = std::move(id);
  b.pages = std::move(pages);
  b.metadata.title = std::move(title);
  b.reindex();
  return b;
}

// Shared assembly for anthology, combined and overlap books.
Book assemble(std::string id, std::string title, std::span<const Book* const> components,
              std::span<const Trim> trims, std::size_t donor) {
  std::vector<Page> pages;
  const auto donor_pages = apply_trim(*components[donor], trims[donor]);
  pages.insert(pages.end(), donor_pages.front.begin(), donor_pages.front.end());
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto t = apply_trim(*components[i], trims[i]);
    pages.insert(pages.end(), t.middle.begin(), t.middle.end());
  }
  pages.insert(pages.end(), donor_pages.back.begin(), donor_pages.back.end());
  return make_book(std::move(id), std::move(title), std::move(pages));
}

SynthBook build_container(SynthKind kind, std::span<const Book* const> components,
                          std::uint64_t seed) {
  Rng rng(seed);
  SynthBook out;
  out.recipe.kind = kind;
  out.recipe.seed = seed;
  out.recipe.donor = static_cast<std::size_t>(rng.uniform_index(components.size()));
  for (const auto* c : components) {
    out.recipe.component_ids.push_back(c->id);
    out.recipe.trims.push_back(draw_trim(*c, rng));
  }
  out.book = assemble(synth_id(kind, seed, 0), "synthetic " + std::string(to_string(kind)),
                      components, out.recipe.trims, out.recipe.donor);
  for (const auto* c : components) {
    out.relations.push_back({c->id, RelationshipLabel::CONTAINS});
  }
  return out;
}

}  // namespace

std::string_view to_string(SynthKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

SynthKind parse_synth_kind(std::string_view text) {
  if (text == "overlap_pair") return SynthKind::Overlap;
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<SynthKind>(i);
  }
  throw ParseError("unknown synthetic kind '" + std::string(text) + "'");
}

Trim clamp_trim(std::size_t pages, Trim trim, std::size_t min_middle) {
  const std::size_t limit = pages > min_middle ? (pages - min_middle) / 2 : 0;
  return {std::min(trim.front, limit), std::min(trim.back, limit)};
}

TrimmedPages apply_trim(const Book& book, Trim trim) {
  const std::span<const Page> pages(book.pages);
  trim = clamp_trim(pages.size(), trim);
  return {pages.first(trim.front),
          pages.subspan(trim.front, pages.size() - trim.front - trim.back),
          pages.last(trim.back)};
}

Trim draw_trim(const Book& book, Rng& rng) {
  Trim t;
  t.front = static_cast<std::size_t>(rng.uniform_int(0, kMaxTrimPages));
  t.back = static_cast<std::size_t>(rng.uniform_int(0, kMaxTrimPages));
  return clamp_trim(book.pages.size(), t);
}

TrimmedPages trim_matter(const Book& book, Rng& rng) { return apply_trim(book, draw_trim(book, rng)); }

SynthBook make_anthology(std::span<const Book* const> components, std::uint64_t seed) {
  if (components.size() < kMinAnthologyParts) {
    throw ValidationError("anthology needs at least 2 components");
  }
  return build_container(SynthKind::Anthology, components, seed);
}

SynthBook make_combined(std::span<const Book* const> volumes, std::uint64_t seed) {
  if (volumes.size() < 2) throw ValidationError("combined volume needs at least 2 volumes");
  const auto& key = volumes.front()->metadata.work_key;
  if (!key || key->empty()) {
    throw ValidationError("combined volume: '" + volumes.front()->id + "' has no work_key");
  }
  for (const auto* v : volumes) {
    if (v->metadata.work_key != key) {
      throw ValidationError("combined volume: work_key mismatch between '" +
                            volumes.front()->id + "' and '" + v->id + "'");
    }
  }
  auto out = build_container(SynthKind::Combined, volumes, seed);
  out.book.metadata.work_key = key;
  return out;
}

std::vector<std::vector<Page>> partition_pages(std::span<const Page> pages,
                                               std::span<const std::size_t> cuts) {
  std::vector<std::vector<Page>> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const std::size_t end = i < cuts.size() ? cuts[i] : pages.size();
    if (end <= start || end > pages.size()) {
      throw ValidationError("partition cut points must be strictly increasing and inside the range");
    }
    parts.emplace_back(pages.begin() + static_cast<std::ptrdiff_t>(start),
                       pages.begin() + static_cast<std::ptrdiff_t>(end));
    start = end;
  }
  return parts;
}

std::vector<SynthBook> make_split(const Book& book, std::uint64_t seed) {
  if (book.pages.size() < kMinSplitParts) {
    throw ValidationError("split: '" + book.id + "' has fewer than 2 pages");
  }
  Rng rng(seed);
  auto k = static_cast<std::size_t>(rng.uniform_int(kMinSplitParts, kMaxSplitParts));
  Trim trim;
  trim.front = static_cast<std::size_t>(rng.uniform_int(0, kMaxTrimPages));
  trim.back = static_cast<std::size_t>(rng.uniform_int(0, kMaxTrimPages));
  trim = clamp_trim(book.pages.size(), trim, kMinSplitParts);
  const std::span<const Page> middle =
      std::span<const Page>(book.pages).subspan(trim.front, book.pages.size() - trim.front - trim.back);
  k = std::min(k, middle.size());

  // k-1 distinct cut offsets drawn uniformly from 1..m-1.
  std::vector<std::size_t> offsets(middle.size() - 1);
  for (std::size_t i = 0; i < offsets.size(); ++i) offsets[i] = i + 1;
  rng.shuffle(std::span<std::size_t>(offsets));
  std::vector<std::size_t> cuts(offsets.begin(), offsets.begin() + static_cast<std::ptrdiff_t>(k - 1));
  std::sort(cuts.begin(), cuts.end());

  auto parts = partition_pages(middle, cuts);
  std::vector<SynthBook> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    SynthBook s;
    s.recipe.kind = SynthKind::Split;
    s.recipe.seed = seed;
    s.recipe.component_ids = {book.id};
    s.recipe.trims = {trim};
    s.recipe.cuts = cuts;
    s.book = make_book(synth_id(SynthKind::Split, seed, i),
                       "synthetic split part " + std::to_string(i + 1), std::move(parts[i]));
    s.relations.push_back({book.id, RelationshipLabel::PARTOF});
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<SynthBook, SynthBook> make_overlap_pair(std::span<const Book* const> pool,
                                                  std::uint64_t seed) {
  const std::size_t n = pool.size();
  if (n < 3) throw ValidationError("overlap pair needs a pool of at least 3 books");
  Rng rng(seed);
  const auto shared = static_cast<std::size_t>(rng.uniform_int(1, std::min<std::size_t>(2, n - 2)));
  const auto priv1 =
      static_cast<std::size_t>(rng.uniform_int(1, std::min<std::size_t>(2, n - shared - 1)));
  const auto priv2 =
      static_cast<std::size_t>(rng.uniform_int(1, std::min<std::size_t>(2, n - shared - priv1)));

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));

  // One trim per distinct component so shared middles are identical in both books.
  std::vector<Trim> trims(n);
  for (std::size_t i = 0; i < shared + priv1 + priv2; ++i) trims[idx[i]] = draw_trim(*pool[idx[i]], rng);

  auto build = [&](std::size_t priv_begin, std::size_t priv_count, std::size_t ordinal) {
    std::vector<std::size_t> members(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(shared));
    members.insert(members.end(), idx.begin() + static_cast<std::ptrdiff_t>(priv_begin),
                   idx.begin() + static_cast<std::ptrdiff_t>(priv_begin + priv_count));
    rng.shuffle(std::span<std::size_t>(members));
    SynthBook s;
    s.recipe.kind = SynthKind::Overlap;
    s.recipe.seed = seed;
    std::vector<const Book*> comps;
    for (auto m : members) {
      comps.push_back(pool[m]);
      s.recipe.component_ids.push_back(pool[m]->id);
      s.recipe.trims.push_back(trims[m]);
    }
    s.recipe.donor = static_cast<std::size_t>(rng.uniform_index(comps.size()));
    s.book = assemble(synth_id(SynthKind::Overlap, seed, ordinal), "synthetic overlapping anthology",
                      comps, s.recipe.trims, s.recipe.donor);
    return s;
  };
  auto first = build(shared, priv1, 0);
  auto second = build(shared + priv1, priv2, 1);
  first.relations.push_back({second.book.id, RelationshipLabel::OVERLAPS});
  second.relations.push_back({first.book.id, RelationshipLabel::OVERLAPS});
  return {std::move(first), std::move(second)};
}

std::vector<Book> eligible_shorts(std::span<const Book> corpus, bool dedup, double quantile) {
  if (corpus.empty()) return {};
  const auto threshold = length_percentile(corpus, quantile);
  std::vector<Book> pool;
  for (const auto& b : corpus) {
    if (book_word_count(b) < threshold) pool.push_back(b);
  }
  if (dedup) return dedup_by_author_title(pool);
  std::sort(pool.begin(), pool.end(), [](const Book& a, const Book& b) { return a.id < b.id; });
  return pool;
}

std::vector<LabeledPair> synth_pair_labels(const SynthBook& synth) {
  std::vector<LabeledPair> out;
  for (const auto& rel : synth.relations) {
    out.push_back({synth.book.id, rel.other_id, rel.label, Provenance::Synthetic});
    if (rel.label != RelationshipLabel::OVERLAPS) {
      out.push_back({rel.other_id, synth.book.id, inverse(rel.label), Provenance::Synthetic});
    }
  }
  return out;
}

nlohmann::json synth_to_json(const SynthBook& synth) {
  nlohmann::json recipe;
  recipe["kind"] = to_string(synth.recipe.kind);
  recipe["components"] = synth.recipe.component_ids;
  recipe["seed"] = synth.recipe.seed;
  auto trims = nlohmann::json::array();
  for (const auto& t : synth.recipe.trims) trims.push_back({t.front, t.back});
  recipe["trims"] = std::move(trims);
  recipe["donor"] = synth.recipe.donor;
  recipe["cuts"] = synth.recipe.cuts;
  auto relations = nlohmann::json::array();
  for (const auto& r : synth.relations) {
    relations.push_back({{"other", r.other_id}, {"label", to_string(r.label)}});
  }
  return {{"book", book_to_json(synth.book)}, {"recipe", std::move(recipe)},
          {"relations", std::move(relations)}};
}

SynthBook synth_from_json(const nlohmann::json& j) {
  try {
    SynthBook s;
    s.book = book_from_json(j.at("book"));
    const auto& r = j.at("recipe");
    s.recipe.kind = parse_synth_kind(r.at("kind").get<std::string>());
    s.recipe.component_ids = r.at("components").get<std::vector<std::string>>();
    s.recipe.seed = r.at("seed").get<std::uint64_t>();
    for (const auto& t : r.at("trims")) {
      s.recipe.trims.push_back({t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>()});
    }
    s.recipe.donor = r.at("donor").get<std::size_t>();
    s.recipe.cuts = r.at("cuts").get<std::vector<std::size_t>>();
    for (const auto& rel : j.at("relations")) {
      s.relations.push_back(
          {rel.at("other").get<std::string>(), parse_label(rel.at("label").get<std::string>())});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synthetic book JSON: ") + e.what());
  }
}

void save_synth_book(const SynthBook& synth, const std::filesystem::path& path) {
  write_file_atomic(path, synth_to_json(synth).dump() + "\n");
}

SynthBook load_synth_book(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return synth_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

bool contains_page_run(std::span<const Page> hay, std::span<const Page> needle) {
  if (needle.empty()) return true;
  if (needle.size() > hay.size()) return false;
  for (std::size_t start = 0; start + needle.size() <= hay.size(); ++start) {
    bool match = true;
    for (std::size_t i = 0; i < needle.size() && match; ++i) {
      match = hay[start + i].same_content(needle[i]);
    }
    if (match) return true;
  }
  return false;
}

namespace {

struct Pools {
  std::vector<Book> shorts;
  std::vector<const Book*> short_ptrs;
  std::vector<const Book*> long_books;
  // work_key -> volume number -> copies
  std::vector<std::vector<std::vector<const Book*>>> works;
};

Pools build_pools(std::span<const Book> corpus, const SynthesisPlan& plan) {
  Pools p;
  p.shorts = eligible_shorts(corpus, plan.dedup, plan.short_quantile);
  for (const auto& b : p.shorts) p.short_ptrs.push_back(&b);

  const auto threshold = length_percentile(corpus, plan.short_quantile);
  std::map<std::string, std::map<unsigned, std::vector<const Book*>>> by_work;
  for (const auto& b : corpus) {
    if (book_word_count(b) > threshold && b.pages.size() >= kMinSplitParts) {
      p.long_books.push_back(&b);
    }
    if (!b.metadata.work_key || !b.metadata.enumeration_raw) continue;
    std::optional<Enumeration> e;
    try {
      e = read_enumeration(*b.metadata.enumeration_raw);
    } catch (const ValidationError&) {
      continue;
    }
    if (e && e->volumes.size() == 1) by_work[*b.metadata.work_key][*e->volumes.begin()].push_back(&b);
  }
  for (auto& [key, vols] : by_work) {
    // Combined books take runs of adjacent entries in volume order.
    if (vols.size() < 2) continue;
    std::vector<std::vector<const Book*>> list;
    for (auto& [num, copies] : vols) list.push_back(copies);
    p.works.push_back(std::move(list));
  }
  return p;
}

std::vector<const Book*> pick_distinct(std::span<const Book* const> pool, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));
  std::vector<const Book*> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(pool[idx[i]]);
  return out;
}

std::vector<SynthBook> run_recipe(SynthKind kind, const Pools& pools, std::uint64_t seed) {
  Rng pick(derive_seed(seed, 0xC0FFEE));
  switch (kind) {
    case SynthKind::Anthology: {
      if (pools.short_ptrs.size() < 2) throw ValidationError("anthology: fewer than 2 short books");
      const auto k = static_cast<std::size_t>(
          pick.uniform_int(2, std::min(kMaxAnthologyParts, pools.short_ptrs.size())));
      const auto comps = pick_distinct(pools.short_ptrs, k, pick);
      return {make_anthology(comps, seed)};
    }
    case SynthKind::Combined: {
      if (pools.works.empty()) throw ValidationError("combined: no work with >= 2 volumes");
      const auto& vols = pools.works[pick.uniform_index(pools.works.size())];
      const auto len = static_cast<std::size_t>(pick.uniform_int(2, static_cast<std::int64_t>(vols.size())));
      const auto start = static_cast<std::size_t>(pick.uniform_index(vols.size() - len + 1));
      std::vector<const Book*> chosen;
      for (std::size_t v = start; v < start + len; ++v) {
        chosen.push_back(vols[v][pick.uniform_index(vols[v].size())]);
      }
      return {make_combined(chosen, seed)};
    }
    case SynthKind::Split: {
      if (pools.long_books.empty()) throw ValidationError("split: no book above the length threshold");
      return make_split(*pools.long_books[pick.uniform_index(pools.long_books.size())], seed);
    }
    case SynthKind::Overlap: {
      if (pools.short_ptrs.size() < 3) throw ValidationError("overlap: fewer than 3 short books");
      auto [a, b] = make_overlap_pair(pools.short_ptrs, seed);
      return {std::move(a), std::move(b)};
    }
  }
  return {};
}

}  // namespace

std::vector<SynthBook> synthesize(std::span<const Book> corpus, const SynthesisPlan& plan) {
  if (corpus.empty()) throw ValidationError("synthesize: empty corpus");
  const auto pools = build_pools(corpus, plan);
  std::vector<SynthBook> out;
  for (const auto& [kind, count] : plan.counts) {
    std::vector<std::vector<SynthBook>> results(count);
    std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < count; ++i) {
      const auto seed = derive_seed(plan.seed, (static_cast<std::uint64_t>(kind) << 32) | i);
      try {
        results[i] = run_recipe(kind, pools, seed);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw ValidationError(e);
    }
    for (auto& r : results) {
      for (auto& s : r) out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace bookrel
