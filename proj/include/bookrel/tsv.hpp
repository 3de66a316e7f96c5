#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bookrel/label.hpp"

namespace bookrel {

/// Header-row TSV table. Fields may not contain tabs or newlines.
struct TsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ParseError if absent.
  std::size_t column(std::string_view name) const;
};

TsvTable read_tsv(const std::filesystem::path& path);
void write_tsv(const std::filesystem::path& path, const TsvTable& table);

std::vector<std::string> split(std::string_view text, char sep);

/// labels.tsv (left_id, right_id, label[, provenance]). Missing provenance
/// column means real.
std::vector<LabeledPair> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, std::span<const LabeledPair> pairs,
                  bool with_provenance);

/// Writes to a temporary sibling then renames, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest round-trip decimal representation.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace bookrel
