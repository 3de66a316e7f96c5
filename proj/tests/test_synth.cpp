#include <gtest/gtest.h>

#include <algorithm>

#include "bookrel/synth.hpp"
#include "test_util.hpp"

using namespace bookrel;

namespace {

std::vector<const Book*> ptrs(const std::vector<Book>& books) {
  std::vector<const Book*> out;
  for (const auto& b : books) out.push_back(&b);
  return out;
}

std::span<const Page> middle_of(const Book& b, Trim t) { return apply_trim(b, t).middle; }

}  // namespace

TEST(Trim, ApplyByHand) {
  const auto b = test::book("x", 100);
  const auto t = apply_trim(b, {3, 7});
  EXPECT_EQ(t.front.size(), 3u);
  EXPECT_EQ(t.middle.size(), 90u);
  EXPECT_EQ(t.back.size(), 7u);
  EXPECT_EQ(t.middle.front().index, 3u);
  EXPECT_EQ(t.middle.back().index, 92u);
  EXPECT_EQ(apply_trim(b, {0, 0}).middle.size(), 100u);
}

TEST(Trim, ClampKeepsMiddle) {
  EXPECT_EQ(clamp_trim(5, {10, 10}), (Trim{2, 2}));
  EXPECT_EQ(clamp_trim(1, {10, 10}), (Trim{0, 0}));
  for (std::size_t pages = 1; pages < 30; ++pages) {
    const auto t = clamp_trim(pages, {10, 10});
    EXPECT_GE(pages - t.front - t.back, 1u);
    const auto t2 = clamp_trim(pages, {10, 10}, 2);
    if (pages >= 2) {
      EXPECT_GE(pages - t2.front - t2.back, 2u);
    }
  }
}

TEST(Trim, DrawsWithinBounds) {
  const auto b = test::book("x", 100);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto t = draw_trim(b, rng);
    EXPECT_LE(t.front, kMaxTrimPages);
    EXPECT_LE(t.back, kMaxTrimPages);
  }
}

TEST(Anthology, ConstructionAndRelations) {
  const std::vector<Book> comps{test::book("A", 12), test::book("B", 15)};
  const auto p = ptrs(comps);
  const auto s = make_anthology(p, 42);
  const auto& r = s.recipe;
  ASSERT_EQ(r.trims.size(), 2u);
  const auto& donor = comps[r.donor];
  const auto dt = apply_trim(donor, r.trims[r.donor]);
  std::size_t expected = dt.front.size() + dt.back.size();
  for (std::size_t i = 0; i < 2; ++i) expected += middle_of(comps[i], r.trims[i]).size();
  EXPECT_EQ(s.book.pages.size(), expected);
  ASSERT_EQ(s.relations.size(), 2u);
  EXPECT_EQ(s.relations[0], (SynthRelation{"A", RelationshipLabel::CONTAINS}));
  EXPECT_EQ(s.relations[1], (SynthRelation{"B", RelationshipLabel::CONTAINS}));
  EXPECT_TRUE(s.book.id.starts_with("synth:anthology:42:"));

  const auto labels = synth_pair_labels(s);
  EXPECT_EQ(labels.size(), 4u);
  EXPECT_NE(std::find(labels.begin(), labels.end(),
                      LabeledPair{"A", s.book.id, RelationshipLabel::PARTOF, Provenance::Synthetic}),
            labels.end());
}

TEST(Anthology, DeterministicAndNeedsTwo) {
  const std::vector<Book> comps{test::book("A", 12), test::book("B", 15), test::book("C", 9)};
  const auto p = ptrs(comps);
  EXPECT_EQ(make_anthology(p, 7), make_anthology(p, 7));
  EXPECT_EQ(synth_to_json(make_anthology(p, 7)).dump(), synth_to_json(make_anthology(p, 7)).dump());
  const std::vector<const Book*> one{&comps[0]};
  EXPECT_THROW(make_anthology(one, 1), ValidationError);
}

TEST(Anthology, ContainmentWitness) {
  std::vector<Book> comps;
  for (int i = 0; i < 5; ++i) comps.push_back(test::book("c" + std::to_string(i), 5 + 4 * i));
  const auto p = ptrs(comps);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = make_anthology(p, seed);
    for (std::size_t i = 0; i < s.recipe.component_ids.size(); ++i) {
      const auto* c = *std::find_if(p.begin(), p.end(), [&](const Book* b) { return b->id == s.recipe.component_ids[i]; });
      EXPECT_TRUE(contains_page_run(s.book.pages, middle_of(*c, s.recipe.trims[i])));
    }
  }
}

TEST(Combined, RequiresSharedWorkKey) {
  const std::vector<Book> vols{test::book("v1", 10, 10, "w"), test::book("v2", 10, 10, "w")};
  const auto p = ptrs(vols);
  const auto s = make_combined(p, 3);
  EXPECT_EQ(s.recipe.kind, SynthKind::Combined);
  EXPECT_EQ(s.relations.size(), 2u);
  const std::vector<Book> mixed{test::book("v1", 10, 10, "w"), test::book("v2", 10, 10, "other")};
  const auto q = ptrs(mixed);
  EXPECT_THROW(make_combined(q, 3), ValidationError);
}

TEST(Split, PartsReconstructMiddle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto src = test::book("src", 10 + seed % 50);
    const auto parts = make_split(src, seed);
    ASSERT_GE(parts.size(), 2u);
    ASSERT_LE(parts.size(), 4u);
    const auto middle = middle_of(src, parts[0].recipe.trims[0]);
    std::vector<Page> joined;
    for (const auto& p : parts) {
      EXPECT_EQ(p.relations, (std::vector<SynthRelation>{{"src", RelationshipLabel::PARTOF}}));
      EXPECT_FALSE(p.book.pages.empty());
      joined.insert(joined.end(), p.book.pages.begin(), p.book.pages.end());
    }
    ASSERT_EQ(joined.size(), middle.size());
    for (std::size_t i = 0; i < joined.size(); ++i) EXPECT_TRUE(joined[i].same_content(middle[i]));
  }
}

TEST(Split, EqualCutsByHand) {
  std::vector<Page> pages;
  for (int i = 0; i < 90; ++i) pages.push_back(test::page_of("p" + std::to_string(i), 1));
  const std::vector<std::size_t> cuts{30, 60};
  const auto parts = partition_pages(pages, cuts);
  ASSERT_EQ(parts.size(), 3u);
  for (const auto& p : parts) EXPECT_EQ(p.size(), 30u);
}

TEST(Split, TooShortRejected) {
  EXPECT_THROW(make_split(test::book("tiny", 1), 1), ValidationError);
}

TEST(Overlap, SharesButNeitherSubsumes) {
  std::vector<Book> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(test::book("s" + std::to_string(i), 8 + i));
  const auto p = ptrs(pool);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto [a, b] = make_overlap_pair(p, seed);
    std::set<std::string> ca(a.recipe.component_ids.begin(), a.recipe.component_ids.end());
    std::set<std::string> cb(b.recipe.component_ids.begin(), b.recipe.component_ids.end());
    std::vector<std::string> shared;
    std::set_intersection(ca.begin(), ca.end(), cb.begin(), cb.end(), std::back_inserter(shared));
    EXPECT_GE(shared.size(), 1u);
    EXPECT_GT(ca.size(), shared.size());
    EXPECT_GT(cb.size(), shared.size());
    EXPECT_FALSE(contains_page_run(a.book.pages, b.book.pages));
    EXPECT_FALSE(contains_page_run(b.book.pages, a.book.pages));
    // Shared component middles appear verbatim in both books.
    for (std::size_t i = 0; i < a.recipe.component_ids.size(); ++i) {
      if (!cb.contains(a.recipe.component_ids[i])) continue;
      const auto& src = *std::find_if(pool.begin(), pool.end(), [&](const Book& x) { return x.id == a.recipe.component_ids[i]; });
      const auto mid = middle_of(src, a.recipe.trims[i]);
      EXPECT_TRUE(contains_page_run(a.book.pages, mid));
      EXPECT_TRUE(contains_page_run(b.book.pages, mid));
    }
    EXPECT_EQ(a.relations, (std::vector<SynthRelation>{{b.book.id, RelationshipLabel::OVERLAPS}}));
  }
  const std::vector<const Book*> small{&pool[0], &pool[1]};
  EXPECT_THROW(make_overlap_pair(small, 1), ValidationError);
}

TEST(EligibleShorts, StrictlyBelowPercentile) {
  std::vector<Book> corpus;
  for (std::uint32_t w : {10u, 20u, 30u, 40u, 50u}) {
    Book b;
    b.id = "b" + std::to_string(w);
    b.pages.push_back(test::page_of("w", w));
    b.reindex();
    b.metadata.title = b.id;
    b.metadata.work_key = b.id;
    corpus.push_back(b);
  }
  const auto pool = eligible_shorts(corpus, true);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0].id, "b10");

  std::vector<Book> equal(3, corpus[0]);
  for (int i = 0; i < 3; ++i) equal[i].id = "e" + std::to_string(i);
  EXPECT_TRUE(eligible_shorts(equal, false).empty());
}

TEST(Synthesize, DeterministicAndJsonRoundTrip) {
  std::vector<Book> corpus;
  for (int w = 0; w < 4; ++w) {
    for (int v = 1; v <= 2; ++v) {
      auto b = test::book("w" + std::to_string(w) + "v" + std::to_string(v), 20 + 3 * w, 10, "w" + std::to_string(w));
      b.metadata.enumeration_raw = "v." + std::to_string(v);
      corpus.push_back(b);
    }
  }
  for (int s = 0; s < 6; ++s) corpus.push_back(test::book("s" + std::to_string(s), 6 + s));
  SynthesisPlan plan;
  plan.seed = 9;
  plan.counts = {{SynthKind::Anthology, 5}, {SynthKind::Combined, 3}, {SynthKind::Split, 4}, {SynthKind::Overlap, 2}};
  const auto a = synthesize(corpus, plan);
  EXPECT_EQ(a, synthesize(corpus, plan));
  std::map<SynthKind, std::size_t> per_kind;
  for (const auto& s : a) ++per_kind[s.recipe.kind];
  EXPECT_EQ(per_kind[SynthKind::Anthology], 5u);
  EXPECT_EQ(per_kind[SynthKind::Combined], 3u);
  EXPECT_EQ(per_kind[SynthKind::Overlap], 4u);
  EXPECT_GE(per_kind[SynthKind::Split], 8u);
  test::TempDir dir;
  for (const auto& s : a) {
    save_synth_book(s, dir / "s.json");
    EXPECT_EQ(load_synth_book(dir / "s.json"), s);
  }
}
