#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bookrel/corpus.hpp"
#include "bookrel/label.hpp"
#include "bookrel/rng.hpp"

namespace bookrel {

enum class SynthKind : std::uint8_t { Anthology, Combined, Split, Overlap };

std::string_view to_string(SynthKind kind);
SynthKind parse_synth_kind(std::string_view text);

/// Pages removed from the front and back of a source book.
struct Trim {
  std::size_t front = 0;
  std::size_t back = 0;
  bool operator==(const Trim&) const = default;
};

inline constexpr std::size_t kMaxTrimPages = 10;

struct SynthRecipe {
  SynthKind kind = SynthKind::Anthology;
  std::vector<std::string> component_ids;
  std::uint64_t seed = 0;
  std::vector<Trim> trims;  // one per component
  std::size_t donor = 0;    // component supplying front/back matter
  std::vector<std::size_t> cuts;  // split only: cut offsets into the middle

  bool operator==(const SynthRecipe&) const = default;
};

struct SynthRelation {
  std::string other_id;
  RelationshipLabel label = RelationshipLabel::CONTAINS;  // from the synthetic book's side
  bool operator==(const SynthRelation&) const = default;
};

struct SynthBook {
  Book book;
  SynthRecipe recipe;
  std::vector<SynthRelation> relations;
  bool operator==(const SynthBook&) const = default;
};

/// Views into a book split into front matter, content and back matter.
struct TrimmedPages {
  std::span<const Page> front;
  std::span<const Page> middle;
  std::span<const Page> back;
};

/// Clamps each side to floor((pages - min_middle) / 2) so at least
/// `min_middle` pages remain.
Trim clamp_trim(std::size_t pages, Trim trim, std::size_t min_middle = 1);
TrimmedPages apply_trim(const Book& book, Trim trim);

/// Draws front and back trims uniformly from 0..10 and clamps them.
Trim draw_trim(const Book& book, Rng& rng);
TrimmedPages trim_matter(const Book& book, Rng& rng);

/// front(donor) ++ middle(c1) ++ ... ++ middle(cn) ++ back(donor), with a
/// uniformly chosen donor and per-component trims. Every function below is a
/// pure function of its inputs and `seed`.
SynthBook make_anthology(std::span<const Book* const> components, std::uint64_t seed);

/// Same construction over volumes of one work (shared, non-empty work_key).
SynthBook make_combined(std::span<const Book* const> volumes, std::uint64_t seed);

/// Splits the trimmed middle of `book` into k in 2..4 contiguous parts.
std::vector<SynthBook> make_split(const Book& book, std::uint64_t seed);

/// Contiguous partition of `pages` at the given strictly increasing offsets.
std::vector<std::vector<Page>> partition_pages(std::span<const Page> pages,
                                               std::span<const std::size_t> cuts);

/// Two anthologies sharing >= 1 component while each has >= 1 private one.
std::pair<SynthBook, SynthBook> make_overlap_pair(std::span<const Book* const> pool,
                                                  std::uint64_t seed);

/// Books strictly shorter than the 40th length percentile, optionally
/// de-duplicated by author and title. Ordered by id.
std::vector<Book> eligible_shorts(std::span<const Book> corpus, bool dedup,
                                  double quantile = 0.4);

/// Labeled pairs contributed by a synthetic book: both directions for
/// CONTAINS/PARTOF relations, the synthetic book's own direction for OVERLAPS.
std::vector<LabeledPair> synth_pair_labels(const SynthBook& synth);

nlohmann::json synth_to_json(const SynthBook& synth);
SynthBook synth_from_json(const nlohmann::json& j);
void save_synth_book(const SynthBook& synth, const std::filesystem::path& path);
SynthBook load_synth_book(const std::filesystem::path& path);

struct SynthesisPlan {
  std::map<SynthKind, std::size_t> counts;
  std::uint64_t seed = 0;
  bool dedup = true;
  double short_quantile = 0.4;
};

/// Runs every recipe of the plan. Recipe i of kind K uses its own seed
/// derived from (plan.seed, K, i), so the output does not depend on thread
/// scheduling.
std::vector<SynthBook> synthesize(std::span<const Book> corpus, const SynthesisPlan& plan);

/// True if `needle` occurs as a contiguous run of equal-content pages in `hay`.
bool contains_page_run(std::span<const Page> hay, std::span<const Page> needle);

}  // namespace bookrel
