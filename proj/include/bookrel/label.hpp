#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bookrel {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (JSON, TSV, embedding text, binary headers).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Book-to-book relationship classes. The numeric order is the default
/// class order used by classifiers.
enum class RelationshipLabel : std::uint8_t {
  SW = 0,
  DV = 1,
  PARTOF = 2,
  CONTAINS = 3,
  DIFF = 4,
  OVERLAPS = 5,
};

inline constexpr std::size_t kLabelCount = 6;

std::string_view to_string(RelationshipLabel label);
RelationshipLabel parse_label(std::string_view text);

/// Label of the reversed pair: CONTAINS <-> PARTOF, everything else is symmetric.
RelationshipLabel inverse(RelationshipLabel label);

inline bool is_whole_part(RelationshipLabel label) {
  return label == RelationshipLabel::PARTOF || label == RelationshipLabel::CONTAINS;
}

enum class Provenance : std::uint8_t { Real, Synthetic };

std::string_view to_string(Provenance provenance);
Provenance parse_provenance(std::string_view text);

/// An ordered, labeled book pair as it appears in labels.tsv / synth-labels.tsv.
struct LabeledPair {
  std::string left_id;
  std::string right_id;
  RelationshipLabel label = RelationshipLabel::DIFF;
  Provenance provenance = Provenance::Real;

  bool operator==(const LabeledPair&) const = default;
};

}  // namespace bookrel
