#include "bookrel/label.hpp"

#include <array>
#include <string>

namespace bookrel {

namespace {
constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "SW", "DV", "PARTOF", "CONTAINS", "DIFF", "OVERLAPS"};
}

std::string_view to_string(RelationshipLabel label) {
  return kLabelNames.at(static_cast<std::size_t>(label));
}

RelationshipLabel parse_label(std::string_view text) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == text) return static_cast<RelationshipLabel>(i);
  }
  throw ParseError("unknown relationship label '" + std::string(text) + "'");
}

RelationshipLabel inverse(RelationshipLabel label) {
  switch (label) {
    case RelationshipLabel::CONTAINS:
      return RelationshipLabel::PARTOF;
    case RelationshipLabel::PARTOF:
      return RelationshipLabel::CONTAINS;
    default:
      return label;
  }
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::Real ? "real" : "synthetic";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "real") return Provenance::Real;
  if (text == "synthetic") return Provenance::Synthetic;
  throw ParseError("unknown provenance '" + std::string(text) + "'");
}

}  // namespace bookrel
