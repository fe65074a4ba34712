#pragma once

// Domain value types shared by every stage of a rating run.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasrate/errors.hpp"

namespace biasrate {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------

/// Three-level bias rating. Enumerators are declared in increasing order of
/// preference: UCS is preferred over DSBS, which is preferred over BS.
enum class BiasRating : std::uint8_t {
  BS = 0,    ///< biased even on unbiased input
  DSBS = 1,  ///< mirrors whatever bias the input carries
  UCS = 2,   ///< unbiased even on biased input
};

inline constexpr std::array<BiasRating, 3> kAllRatings = {BiasRating::BS, BiasRating::DSBS,
                                                          BiasRating::UCS};

constexpr int preference_rank(BiasRating r) noexcept { return static_cast<int>(r); }

/// True when `a` is strictly preferred to `b`.
constexpr bool preferred(BiasRating a, BiasRating b) noexcept {
  return preference_rank(a) > preference_rank(b);
}

constexpr std::string_view to_string(BiasRating r) noexcept {
  switch (r) {
    case BiasRating::BS: return "BS";
    case BiasRating::DSBS: return "DSBS";
    case BiasRating::UCS: return "UCS";
  }
  return "?";
}

inline std::optional<BiasRating> try_parse_rating(std::string_view token) {
  for (auto r : kAllRatings) {
    if (token == to_string(r)) return r;
  }
  return std::nullopt;
}

inline BiasRating parse_rating(std::string_view token) {
  if (auto r = try_parse_rating(token)) return *r;
  throw UsageError("unknown bias rating '" + std::string(token) + "' (expected BS, DSBS or UCS)");
}

/// Least-preferred rating in the list.
inline BiasRating worst_of(std::span<const BiasRating> ratings) {
  if (ratings.empty()) throw UsageError("worst_of requires at least one rating");
  return *std::min_element(ratings.begin(), ratings.end(), [](BiasRating a, BiasRating b) {
    return preference_rank(a) < preference_rank(b);
  });
}

inline BiasRating worst_of(std::initializer_list<BiasRating> ratings) {
  return worst_of(std::span<const BiasRating>(ratings.begin(), ratings.size()));
}

/// Nonempty subset of {BS, DSBS, UCS}. A singleton is a determinate rating;
/// the full set means the outcome is unknown and must be measured.
class RatingSet {
 public:
  RatingSet(BiasRating r) : bits_(bit(r)) {}  // NOLINT(google-explicit-constructor)

  RatingSet(std::initializer_list<BiasRating> ratings) {
    for (auto r : ratings) bits_ |= bit(r);
    if (bits_ == 0) throw UsageError("a rating set cannot be empty");
  }

  /// Bit i set <=> rating with rank i is a member. Mask must be in 1..7.
  static RatingSet from_mask(unsigned mask) {
    if (mask == 0 || mask > 7) throw UsageError("rating set mask out of range");
    RatingSet s(BiasRating::BS);
    s.bits_ = static_cast<std::uint8_t>(mask);
    return s;
  }

  static RatingSet all() { return from_mask(7); }

  /// Parses "BS", "BS|DSBS" or "BS,UCS".
  static RatingSet parse(std::string_view text) {
    unsigned mask = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find_first_of("|,", start);
      if (end == std::string_view::npos) end = text.size();
      auto token = text.substr(start, end - start);
      while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
      while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
      mask |= bit(parse_rating(token));
      start = end + 1;
    }
    return from_mask(mask);
  }

  unsigned mask() const noexcept { return bits_; }
  bool contains(BiasRating r) const noexcept { return (bits_ & bit(r)) != 0; }
  bool is_determinate() const noexcept { return std::popcount(bits_) == 1; }
  bool is_subset_of(const RatingSet& other) const noexcept {
    return (bits_ & ~other.bits_) == 0;
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }

  std::vector<BiasRating> members() const {
    std::vector<BiasRating> out;
    for (auto r : kAllRatings)
      if (contains(r)) out.push_back(r);
    return out;
  }

  RatingSet operator|(const RatingSet& other) const { return from_mask(bits_ | other.bits_); }

  /// Members joined with '|' in label order, e.g. "BS|DSBS|UCS".
  std::string to_string() const {
    std::string out;
    for (auto r : kAllRatings) {
      if (!contains(r)) continue;
      if (!out.empty()) out += '|';
      out += biasrate::to_string(r);
    }
    return out;
  }

  friend bool operator==(const RatingSet&, const RatingSet&) = default;

 private:
  static constexpr std::uint8_t bit(BiasRating r) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(r));
  }

  std::uint8_t bits_ = 0;
};

// ---------------------------------------------------------------------------
// Attributes and distributions
// ---------------------------------------------------------------------------

/// A protected attribute with its ordered categories. One category is the
/// catch-all that absorbs unclassifiable output.
class AttributeSpec {
 public:
  AttributeSpec(std::string name, std::vector<std::string> values,
                std::string catch_all = "Other")
      : name_(std::move(name)), values_(std::move(values)), catch_all_(std::move(catch_all)) {
    if (name_.empty()) throw SpecError("attribute name must not be empty");
    if (values_.size() < 2) throw SpecError("attribute '" + name_ + "' needs at least 2 values");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      for (std::size_t j = i + 1; j < values_.size(); ++j) {
        if (values_[i] == values_[j])
          throw SpecError("attribute '" + name_ + "' repeats value '" + values_[i] + "'");
      }
    }
    auto it = std::find(values_.begin(), values_.end(), catch_all_);
    if (it == values_.end())
      throw SpecError("catch-all '" + catch_all_ + "' is not a value of '" + name_ + "'");
    catch_all_index_ = static_cast<std::size_t>(it - values_.begin());
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& values() const noexcept { return values_; }
  const std::string& catch_all() const noexcept { return catch_all_; }
  std::size_t catch_all_index() const noexcept { return catch_all_index_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::optional<std::size_t> index_of(std::string_view value) const {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i] == value) return i;
    return std::nullopt;
  }

  std::size_t require_index(std::string_view value) const {
    if (auto i = index_of(value)) return *i;
    throw SpecError("'" + std::string(value) + "' is not a value of attribute '" + name_ + "'");
  }

  friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;

 private:
  std::string name_;
  std::vector<std::string> values_;
  std::string catch_all_;
  std::size_t catch_all_index_ = 0;
};

/// Gender with categories He, She and the catch-all Other.
inline AttributeSpec gender_attribute() { return AttributeSpec("Gender", {"He", "She", "Other"}); }

enum class DistributionKind { biased, unbiased };

constexpr std::string_view to_string(DistributionKind k) noexcept {
  return k == DistributionKind::biased ? "biased" : "unbiased";
}

inline DistributionKind parse_distribution_kind(std::string_view s) {
  if (s == "biased") return DistributionKind::biased;
  if (s == "unbiased") return DistributionKind::unbiased;
  throw SpecError("distribution kind must be 'biased' or 'unbiased', got '" + std::string(s) + "'");
}

inline constexpr double kProportionSumTolerance = 1e-9;

/// A declared proportion vector over an attribute's values.
class DistributionSpec {
 public:
  DistributionSpec(AttributeSpec attribute, std::vector<double> proportions, DistributionKind kind,
                   std::string label)
      : attribute_(std::move(attribute)),
        proportions_(std::move(proportions)),
        kind_(kind),
        label_(std::move(label)) {
    if (label_.empty()) throw SpecError("distribution label must not be empty");
    if (proportions_.size() != attribute_.size())
      throw SpecError("distribution '" + label_ + "' has " + std::to_string(proportions_.size()) +
                      " proportions but attribute '" + attribute_.name() + "' has " +
                      std::to_string(attribute_.size()) + " values");
    double sum = 0.0;
    for (double p : proportions_) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw SpecError("distribution '" + label_ + "' has a proportion outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProportionSumTolerance)
      throw SpecError("distribution '" + label_ + "' proportions sum to " + std::to_string(sum) +
                      ", not 1");
  }

  const AttributeSpec& attribute() const noexcept { return attribute_; }
  const std::vector<double>& proportions() const noexcept { return proportions_; }
  DistributionKind kind() const noexcept { return kind_; }
  const std::string& label() const noexcept { return label_; }

  double catch_all_proportion() const { return proportions_[attribute_.catch_all_index()]; }

  /// Input-generation specs never place mass on the catch-all.
  void require_generatable() const {
    if (catch_all_proportion() != 0.0)
      throw SpecError("distribution '" + label_ + "' assigns nonzero proportion to catch-all '" +
                      attribute_.catch_all() + "'; it cannot be used to generate input");
  }

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;

 private:
  AttributeSpec attribute_;
  std::vector<double> proportions_;
  DistributionKind kind_;
  std::string label_;
};

/// Observed integer counts per attribute value.
class ValueCounts {
 public:
  using count_type = std::uint64_t;

  explicit ValueCounts(AttributeSpec attribute)
      : attribute_(std::move(attribute)), counts_(attribute_.size(), 0) {}

  ValueCounts(AttributeSpec attribute, std::vector<count_type> counts)
      : attribute_(std::move(attribute)), counts_(std::move(counts)) {
    if (counts_.size() != attribute_.size())
      throw InputError("count vector length " + std::to_string(counts_.size()) +
                       " does not match attribute '" + attribute_.name() + "'");
  }

  const AttributeSpec& attribute() const noexcept { return attribute_; }
  const std::vector<count_type>& counts() const noexcept { return counts_; }
  count_type operator[](std::size_t i) const { return counts_.at(i); }

  count_type total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), count_type{0});
  }

  void add(std::size_t index, count_type n = 1) { counts_.at(index) += n; }
  void add(std::string_view value, count_type n = 1) { add(attribute_.require_index(value), n); }

  /// "(20,20,0)"
  std::string to_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(counts_[i]);
    }
    return out + ")";
  }

  friend bool operator==(const ValueCounts&, const ValueCounts&) = default;

 private:
  AttributeSpec attribute_;
  std::vector<count_type> counts_;
};

/// A generated batch of template texts with the attribute value assigned to
/// every slot.
struct DataBlock {
  DistributionSpec spec;
  std::vector<std::string> texts;
  std::vector<std::vector<std::string>> slot_truth;
  std::size_t block_size = 0;
  std::size_t slots_per_text = 0;
  std::uint64_t seed = 0;

  /// Aggregate of slot_truth.
  ValueCounts truth_counts() const {
    ValueCounts counts(spec.attribute());
    for (const auto& slots : slot_truth)
      for (const auto& v : slots) counts.add(v);
    return counts;
  }

  friend bool operator==(const DataBlock&, const DataBlock&) = default;
};

inline std::ostream& operator<<(std::ostream& os, BiasRating r) { return os << to_string(r); }
inline std::ostream& operator<<(std::ostream& os, const RatingSet& s) { return os << s.to_string(); }
inline std::ostream& operator<<(std::ostream& os, const ValueCounts& c) { return os << c.to_string(); }

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void to_json(json& j, BiasRating r) { j = std::string(to_string(r)); }
inline void to_json(json& j, const RatingSet& s) { j = s.to_string(); }

inline void to_json(json& j, const AttributeSpec& a) {
  j = json{{"name", a.name()}, {"values", a.values()}, {"catch_all", a.catch_all()}};
}

inline AttributeSpec attribute_from_json(const json& j) {
  try {
    return AttributeSpec(j.at("name").get<std::string>(),
                         j.at("values").get<std::vector<std::string>>(),
                         j.value("catch_all", std::string("Other")));
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed attribute: ") + e.what());
  }
}

inline void to_json(json& j, const DistributionSpec& d) {
  j = json{{"attribute", d.attribute()},
           {"proportions", d.proportions()},
           {"kind", to_string(d.kind())},
           {"label", d.label()}};
}

/// `fallback` supplies the attribute when the document omits it.
inline DistributionSpec distribution_from_json(const json& j,
                                               const std::optional<AttributeSpec>& fallback = {}) {
  try {
    std::optional<AttributeSpec> attribute;
    if (j.contains("attribute")) {
      attribute = attribute_from_json(j.at("attribute"));
    } else if (fallback) {
      attribute = fallback;
    } else {
      throw SpecError("distribution has no attribute");
    }
    return DistributionSpec(*attribute, j.at("proportions").get<std::vector<double>>(),
                            parse_distribution_kind(j.at("kind").get<std::string>()),
                            j.at("label").get<std::string>());
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed distribution spec: ") + e.what());
  }
}

inline void to_json(json& j, const ValueCounts& c) {
  j = json{{"attribute", c.attribute()}, {"counts", c.counts()}};
}

inline ValueCounts counts_from_json(const json& j) {
  try {
    return ValueCounts(attribute_from_json(j.at("attribute")),
                       j.at("counts").get<std::vector<ValueCounts::count_type>>());
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed value counts: ") + e.what());
  }
}

inline void to_json(json& j, const DataBlock& b) {
  j = json{{"spec", b.spec},
           {"seed", b.seed},
           {"block_size", b.block_size},
           {"slots_per_text", b.slots_per_text},
           {"texts", b.texts},
           {"slot_truth", b.slot_truth}};
}

inline DataBlock block_from_json(const json& j) {
  try {
    DataBlock b{distribution_from_json(j.at("spec")),
                j.at("texts").get<std::vector<std::string>>(),
                j.at("slot_truth").get<std::vector<std::vector<std::string>>>(),
                0,
                0,
                j.at("seed").get<std::uint64_t>()};
    b.block_size = j.value("block_size", b.texts.size());
    b.slots_per_text =
        j.value("slots_per_text", b.slot_truth.empty() ? std::size_t{0} : b.slot_truth[0].size());
    if (b.texts.size() != b.block_size || b.slot_truth.size() != b.block_size)
      throw SpecError("data block size does not match its texts");
    for (const auto& slots : b.slot_truth)
      if (slots.size() != b.slots_per_text) throw SpecError("data block slot_truth is ragged");
    return b;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed data block: ") + e.what());
  }
}

}  // namespace biasrate
