#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bookrel/label.hpp"

namespace bookrel {

/// Volume enumeration in canonical "v.N" / "v.N-M" form.
struct Enumeration {
  std::string raw;
  std::string canonical;
  std::set<unsigned> volumes;

  bool operator==(const Enumeration&) const = default;
};

class InvalidRangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Canonicalizes volume enumerations such as "volume 1", "v1", "Vol. 6 - 9".
/// Returns nullopt when the string carries no recognizable single-volume or
/// single-range enumeration (issue numbers, dates, comma lists...).
std::optional<std::string> normalize_enumeration(std::string_view raw);

/// Parses a canonical enumeration. Throws InvalidRangeError when M <= N or a
/// volume number is zero, ParseError when the text is not canonical.
Enumeration parse_enumeration(std::string_view canonical);

/// normalize + parse; nullopt for NotEnumerated strings.
std::optional<Enumeration> read_enumeration(std::string_view raw);

struct CatalogEntry {
  std::string book_id;
  std::string work_key;
  std::optional<Enumeration> enumeration;
};

struct GroundTruthRelation {
  std::string left_id;
  std::string right_id;
  RelationshipLabel label = RelationshipLabel::SW;
  static constexpr std::string_view source = "enumeration-heuristic";

  bool operator==(const GroundTruthRelation&) const = default;
};

/// Labels every ordered pair of distinct books sharing a work_key:
/// equal volume sets -> SW, disjoint -> DV, strict superset -> CONTAINS
/// (and PARTOF for the reverse pair). Partial overlaps and entries without an
/// enumeration get no label. Output is grouped by work_key in first-seen order.
std::vector<GroundTruthRelation> infer_relations(std::span<const CatalogEntry> catalog);

/// catalog.tsv: book_id, work_key, enumeration_raw.
std::vector<CatalogEntry> read_catalog(const std::string& path);

}  // namespace bookrel
