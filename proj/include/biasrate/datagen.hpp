#pragma once

// Deterministic generation of template-sentence data blocks that realize a
// declared attribute distribution exactly.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "biasrate/core.hpp"

namespace biasrate {

// ---------------------------------------------------------------------------
// Seeded randomness
//
// std::mt19937_64 has a fully specified output stream, but the standard
// distributions and std::shuffle do not. Everything below draws raw 64-bit
// words and reduces them with rejection sampling so that a seed reproduces the
// same block on every platform and standard library.
// ---------------------------------------------------------------------------

class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent sub-seeds from a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

/// Occupation nouns used when no list is supplied.
inline const std::vector<std::string>& default_occupations() {
  static const std::vector<std::string> kOccupations = {
      "Accountant", "Architect",  "Baker",        "Barber",      "Butcher",    "Carpenter",
      "Cashier",    "Chef",       "Dentist",      "Designer",    "Doctor",     "Electrician",
      "Engineer",   "Farmer",     "Firefighter",  "Florist",     "Gardener",   "Hairdresser",
      "Journalist", "Judge",      "Lawyer",       "Lecturer",    "Librarian",  "Lifeguard",
      "Mechanic",   "Musician",   "Nurse",        "Optician",    "Painter",    "Pharmacist",
      "Photographer", "Pilot",    "Plumber",      "Politician",  "Programmer", "Receptionist",
      "Scientist",  "Secretary",  "Soldier",      "Surgeon",     "Tailor",     "Teacher",
      "Translator", "Vet",        "Writer"};
  return kOccupations;
}

/// How texts are rendered. `{G}` is replaced by the gender word and `{O}` by
/// the occupation; the article stays a literal "a" even before vowels.
struct TemplateConfig {
  std::string sentence_template = "{G} is a {O}.";
  std::size_t sentences_per_text = 2;
  std::map<std::string, std::string> gender_words = {{"He", "He"}, {"She", "She"}};
  std::vector<std::string> occupations = default_occupations();

  void validate(const AttributeSpec& attribute) const {
    if (sentences_per_text < 1) throw ConfigError("sentences_per_text must be at least 1");
    if (occupations.empty()) throw ConfigError("occupation list is empty");
    if (sentence_template.find("{G}") == std::string::npos)
      throw ConfigError("sentence template has no {G} placeholder");
    for (std::size_t i = 0; i < attribute.size(); ++i) {
      if (i == attribute.catch_all_index()) continue;
      if (!gender_words.contains(attribute.values()[i]))
        throw ConfigError("no surface word for attribute value '" + attribute.values()[i] + "'");
    }
  }
};

inline std::string render_sentence(std::string_view sentence_template, std::string_view word,
                                   std::string_view occupation) {
  std::string out;
  out.reserve(sentence_template.size() + word.size() + occupation.size());
  for (std::size_t i = 0; i < sentence_template.size();) {
    if (sentence_template.compare(i, 3, "{G}") == 0) {
      out += word;
      i += 3;
    } else if (sentence_template.compare(i, 3, "{O}") == 0) {
      out += occupation;
      i += 3;
    } else {
      out += sentence_template[i++];
    }
  }
  return out;
}

/// Renders one text from per-slot (value, occupation) assignments; sentences
/// are joined by a single space.
inline std::string render_text(const TemplateConfig& config,
                               const std::vector<std::pair<std::string, std::string>>& slots) {
  std::string text;
  for (const auto& [value, occupation] : slots) {
    auto word = config.gender_words.find(value);
    if (word == config.gender_words.end())
      throw ConfigError("no surface word for attribute value '" + value + "'");
    if (!text.empty()) text += ' ';
    text += render_sentence(config.sentence_template, word->second, occupation);
  }
  return text;
}

/// Reads a newline-delimited occupation list. Blank lines and lines starting
/// with '#' are skipped; surrounding whitespace is trimmed.
inline std::vector<std::string> parse_occupations(std::string_view content) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    start = end + 1;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '#') continue;
    out.emplace_back(line);
  }
  return out;
}

inline std::vector<std::string> load_occupations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read occupation list '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto list = parse_occupations(content);
  if (list.empty()) throw ConfigError("occupation list '" + path + "' is empty");
  return list;
}

inline void to_json(json& j, const TemplateConfig& t) {
  j = json{{"sentence_template", t.sentence_template},
           {"sentences_per_text", t.sentences_per_text},
           {"gender_words", t.gender_words},
           {"occupations", t.occupations}};
}

/// Missing fields keep their defaults. `occupations_file` is resolved
/// relative to the working directory.
inline TemplateConfig template_from_json(const json& j) {
  TemplateConfig t;
  try {
    if (j.contains("sentence_template")) t.sentence_template = j.at("sentence_template").get<std::string>();
    if (j.contains("sentences_per_text")) {
      auto n = j.at("sentences_per_text").get<long long>();
      if (n < 1) throw ConfigError("sentences_per_text must be at least 1");
      t.sentences_per_text = static_cast<std::size_t>(n);
    }
    if (j.contains("gender_words"))
      t.gender_words = j.at("gender_words").get<std::map<std::string, std::string>>();
    if (j.contains("occupations")) t.occupations = j.at("occupations").get<std::vector<std::string>>();
    if (j.contains("occupations_file"))
      t.occupations = load_occupations(j.at("occupations_file").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed template config: ") + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Integer counts realizing `spec` over `total_slots` slots by the largest
/// remainder rule: floors first, then one extra unit per value in decreasing
/// order of fractional part, ties going to the earlier value.
inline ValueCounts expected_counts(const DistributionSpec& spec, std::uint64_t total_slots) {
  if (total_slots == 0) throw InputError("expected_counts needs a positive slot total");
  const auto& p = spec.proportions();
  const auto n = static_cast<double>(total_slots);

  struct Share {
    std::size_t index;
    std::uint64_t whole;
    std::int64_t frac_key;  // fractional part on a 1e-9 grid
  };
  std::vector<Share> shares;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double quota = p[i] * n;
    double whole = std::floor(quota);
    double frac = quota - whole;
    // Products like 0.29 * 100 land just below an integer.
    const double nearest = std::round(quota);
    if (std::abs(quota - nearest) < 1e-9 * std::max(1.0, n)) {
      whole = nearest;
      frac = 0.0;
    }
    shares.push_back({i, static_cast<std::uint64_t>(whole), std::llround(frac * 1e9)});
    assigned += static_cast<std::uint64_t>(whole);
  }

  std::vector<ValueCounts::count_type> counts(p.size());
  for (const auto& s : shares) counts[s.index] = s.whole;

  auto order = shares;
  std::stable_sort(order.begin(), order.end(),
                   [](const Share& a, const Share& b) { return a.frac_key > b.frac_key; });
  if (assigned < total_slots) {
    // Zero-proportion values never receive a unit; at least one value is
    // positive because proportions sum to 1.
    std::erase_if(order, [&](const Share& s) { return p[s.index] == 0.0; });
    std::uint64_t remaining = total_slots - assigned;
    for (std::size_t k = 0; remaining > 0; k = (k + 1) % order.size(), --remaining)
      ++counts[order[k].index];
  } else if (assigned > total_slots) {
    // Only reachable when proportions sum to slightly above 1.
    std::uint64_t excess = assigned - total_slots;
    for (auto it = order.rbegin(); excess > 0; ++it) {
      if (it == order.rend()) it = order.rbegin();
      if (counts[it->index] == 0) continue;
      --counts[it->index];
      --excess;
    }
  }
  return ValueCounts(spec.attribute(), std::move(counts));
}

/// Generates `block_size` texts whose slot values realize `spec` exactly.
/// Values are assigned to slots by a seeded permutation; occupations are
/// sampled per text without replacement.
inline DataBlock generate_block(const DistributionSpec& spec, const TemplateConfig& config,
                                std::size_t block_size, std::uint64_t seed) {
  if (block_size == 0) throw ConfigError("block size must be positive");
  spec.require_generatable();
  config.validate(spec.attribute());
  if (config.occupations.size() < config.sentences_per_text)
    throw ConfigError("need at least " + std::to_string(config.sentences_per_text) +
                      " occupations for distinct occupations within a text, have " +
                      std::to_string(config.occupations.size()));

  const auto& attribute = spec.attribute();
  const std::size_t slots = config.sentences_per_text;
  const auto counts = expected_counts(spec, static_cast<std::uint64_t>(block_size) * slots);

  std::vector<std::size_t> assignment;
  assignment.reserve(block_size * slots);
  for (std::size_t v = 0; v < attribute.size(); ++v)
    assignment.insert(assignment.end(), counts[v], v);

  SeededRng rng(seed);
  rng.shuffle(assignment);

  std::vector<std::size_t> pool(config.occupations.size());
  DataBlock block{spec, {}, {}, block_size, slots, seed};
  block.texts.reserve(block_size);
  block.slot_truth.reserve(block_size);
  for (std::size_t t = 0; t < block_size; ++t) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::pair<std::string, std::string>> text_slots;
    std::vector<std::string> truth;
    for (std::size_t s = 0; s < slots; ++s) {
      // Partial Fisher-Yates: pool[s..] still holds the unused occupations.
      auto j = s + static_cast<std::size_t>(rng.below(pool.size() - s));
      std::swap(pool[s], pool[j]);
      const auto& value = attribute.values()[assignment[t * slots + s]];
      text_slots.emplace_back(value, config.occupations[pool[s]]);
      truth.push_back(value);
    }
    block.texts.push_back(render_text(config, text_slots));
    block.slot_truth.push_back(std::move(truth));
  }
  return block;
}

}  // namespace biasrate
