#include "bookrel/enumparse.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "bookrel/tsv.hpp"

namespace bookrel {

namespace {

// Volume numbers beyond this many digits are not enumerations (years, ids).
constexpr std::size_t kMaxDigits = 6;

class Scanner {
 public:
  explicit Scanner(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }

  void skip_space_and(std::string_view extra = "") {
    while (!done()) {
      const char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || extra.find(c) != std::string_view::npos) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool consume_word(std::string_view w) {
    if (s_.substr(pos_, w.size()) != w) return false;
    pos_ += w.size();
    return true;
  }

  std::optional<unsigned> number() {
    std::size_t start = pos_;
    while (!done() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const auto digits = s_.substr(start, pos_ - start);
    if (digits.empty() || digits.size() > kMaxDigits) return std::nullopt;
    unsigned value = 0;
    for (char c : digits) value = value * 10 + static_cast<unsigned>(c - '0');
    return value;
  }

  // Range separators: '-', en dash, em dash, "to".
  bool separator() {
    skip_space_and();
    if (consume_word("-") || consume_word("\xE2\x80\x93") || consume_word("\xE2\x80\x94")) {
      skip_space_and("-");
      return true;
    }
    if (consume_word("to") && (done() || !std::isalpha(static_cast<unsigned char>(peek())))) {
      skip_space_and();
      return true;
    }
    return false;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

// Longest prefixes first so "volumes" is not read as "v" + "olumes".
bool consume_volume_prefix(Scanner& sc) {
  for (std::string_view p : {"volumes", "volume", "vols", "vol", "v"}) {
    if (sc.consume_word(p)) {
      sc.skip_space_and(".:#");
      return true;
    }
  }
  return false;
}

}  // namespace

std::optional<std::string> normalize_enumeration(std::string_view raw) {
  std::string lower(raw);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  Scanner sc(lower);
  sc.skip_space_and("([");
  if (!consume_volume_prefix(sc)) return std::nullopt;
  const auto first = sc.number();
  if (!first) return std::nullopt;

  std::optional<unsigned> last;
  if (sc.separator()) {
    consume_volume_prefix(sc);
    last = sc.number();
    if (!last) return std::nullopt;
  }
  sc.skip_space_and(".)];");
  if (!sc.done()) return std::nullopt;

  std::string out = "v." + std::to_string(*first);
  if (last) out += "-" + std::to_string(*last);
  return out;
}

Enumeration parse_enumeration(std::string_view canonical) {
  auto bad = [&] { return ParseError("not a canonical enumeration: '" + std::string(canonical) + "'"); };
  if (canonical.substr(0, 2) != "v.") throw bad();
  const auto body = canonical.substr(2);
  const auto dash = body.find('-');
  auto parse_num = [&](std::string_view digits) {
    if (digits.empty() || digits.size() > kMaxDigits ||
        !std::all_of(digits.begin(), digits.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw bad();
    }
    return static_cast<unsigned>(std::stoul(std::string(digits)));
  };
  Enumeration e;
  e.raw = std::string(canonical);
  e.canonical = std::string(canonical);
  const unsigned first = parse_num(body.substr(0, dash));
  const unsigned last = dash == std::string_view::npos ? first : parse_num(body.substr(dash + 1));
  if (first == 0) throw InvalidRangeError("volume numbers must be positive: '" + e.canonical + "'");
  if (dash != std::string_view::npos && last <= first) {
    throw InvalidRangeError("invalid volume range '" + e.canonical + "'");
  }
  for (unsigned v = first; v <= last; ++v) e.volumes.insert(v);
  return e;
}

std::optional<Enumeration> read_enumeration(std::string_view raw) {
  const auto canonical = normalize_enumeration(raw);
  if (!canonical) return std::nullopt;
  auto e = parse_enumeration(*canonical);
  e.raw = std::string(raw);
  return e;
}

std::vector<GroundTruthRelation> infer_relations(std::span<const CatalogEntry> catalog) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const CatalogEntry*>> groups;
  for (const auto& entry : catalog) {
    if (entry.work_key.empty()) {
      throw ValidationError("catalog entry '" + entry.book_id + "' has an empty work_key");
    }
    if (!entry.enumeration) continue;
    auto [it, inserted] = groups.try_emplace(entry.work_key);
    if (inserted) order.push_back(entry.work_key);
    it->second.push_back(&entry);
  }

  std::vector<GroundTruthRelation> out;
  for (const auto& key : order) {
    const auto& members = groups[key];
    for (const auto* a : members) {
      for (const auto* b : members) {
        if (a == b || a->book_id == b->book_id) continue;
        const auto& va = a->enumeration->volumes;
        const auto& vb = b->enumeration->volumes;
        std::optional<RelationshipLabel> label;
        if (va == vb) {
          label = RelationshipLabel::SW;
        } else if (std::none_of(va.begin(), va.end(), [&](unsigned v) { return vb.count(v); })) {
          label = RelationshipLabel::DV;
        } else if (std::includes(va.begin(), va.end(), vb.begin(), vb.end())) {
          label = RelationshipLabel::CONTAINS;
        } else if (std::includes(vb.begin(), vb.end(), va.begin(), va.end())) {
          label = RelationshipLabel::PARTOF;
        }
        if (label) out.push_back({a->book_id, b->book_id, *label});
      }
    }
  }
  return out;
}

std::vector<CatalogEntry> read_catalog(const std::string& path) {
  const auto table = read_tsv(path);
  const auto id = table.column("book_id");
  const auto work = table.column("work_key");
  const auto raw = table.column("enumeration_raw");
  std::vector<CatalogEntry> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    CatalogEntry e;
    e.book_id = row[id];
    e.work_key = row[work];
    if (!row[raw].empty()) {
      try {
        e.enumeration = read_enumeration(row[raw]);
      } catch (const InvalidRangeError&) {
        // Degenerate ranges carry no usable volume information.
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace bookrel
