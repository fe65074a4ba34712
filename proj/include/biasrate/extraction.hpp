#pragma once

// Measurement: free text back to per-value counts.

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biasrate/core.hpp"

namespace biasrate {

/// Word lists identifying each non-catch-all attribute value. The first word
/// of each list is its nominative form.
class PronounLexicon {
 public:
  using Entries = std::vector<std::pair<std::string, std::vector<std::string>>>;

  PronounLexicon(const AttributeSpec& attribute, Entries entries) : entries_(std::move(entries)) {
    for (auto& [value, words] : entries_) {
      if (!attribute.index_of(value))
        throw ConfigError("lexicon names unknown value '" + value + "'");
      if (value == attribute.catch_all())
        throw ConfigError("the catch-all value cannot have a lexicon");
      if (words.empty()) throw ConfigError("lexicon for '" + value + "' is empty");
      for (auto& w : words) {
        w = lower(w);
        if (w.empty() || !std::all_of(w.begin(), w.end(), is_alpha))
          throw ConfigError("lexicon word '" + w + "' must be alphabetic");
        if (auto existing = lookup_.find(w); existing != lookup_.end() && existing->second != value)
          throw ConfigError("word '" + w + "' appears in more than one lexicon");
        lookup_[w] = value;
      }
    }
  }

  /// he/him/his for He, she/her/hers for She.
  static PronounLexicon english_gender(const AttributeSpec& attribute = gender_attribute()) {
    return PronounLexicon(attribute,
                          {{"He", {"he", "him", "his"}}, {"She", {"she", "her", "hers"}}});
  }

  const Entries& entries() const noexcept { return entries_; }

  /// Attribute value for a word, matched case-insensitively.
  std::optional<std::string> value_of(std::string_view word) const {
    auto it = lookup_.find(lower(word));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& nominative(std::string_view value) const {
    for (const auto& [v, words] : entries_)
      if (v == value) return words.front();
    throw ConfigError("no lexicon entry for value '" + std::string(value) + "'");
  }

  static bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

  static std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }

 private:
  Entries entries_;
  std::map<std::string, std::string, std::less<>> lookup_;
};

/// Calls `fn(offset, length)` for every maximal run of ASCII letters. Any
/// other character separates words, so "he's" yields "he" and "s".
template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (!PronounLexicon::is_alpha(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && PronounLexicon::is_alpha(text[i])) ++i;
    fn(start, i - start);
  }
}

/// Sentences separated by '.', '!' or '?'. Fragments holding only whitespace
/// are skipped; trailing text without a terminator still counts.
inline std::vector<std::string_view> split_sentences(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i < text.size() && text[i] != '.' && text[i] != '!' && text[i] != '?') continue;
    auto piece = text.substr(start, i - start);
    if (piece.find_first_not_of(" \t\r\n") != std::string_view::npos) out.push_back(piece);
    start = i + 1;
  }
  return out;
}

/// An attribute together with the lexicon that recognizes its values.
class Extractor {
 public:
  Extractor(AttributeSpec attribute, PronounLexicon lexicon)
      : attribute_(std::move(attribute)), lexicon_(std::move(lexicon)) {}

  static Extractor english_gender() {
    auto attribute = gender_attribute();
    auto lexicon = PronounLexicon::english_gender(attribute);
    return Extractor(std::move(attribute), std::move(lexicon));
  }

  const AttributeSpec& attribute() const noexcept { return attribute_; }
  const PronounLexicon& lexicon() const noexcept { return lexicon_; }

  /// Value of the first lexicon word in the sentence, else the catch-all.
  std::string classify_sentence(std::string_view sentence) const {
    std::optional<std::string> found;
    for_each_word(sentence, [&](std::size_t off, std::size_t len) {
      if (!found) found = lexicon_.value_of(sentence.substr(off, len));
    });
    return found ? *found : attribute_.catch_all();
  }

  /// Classifies the first `slots_per_text` sentences of every output. Missing
  /// sentences count as catch-all, so the total is outputs * slots_per_text.
  ValueCounts count_block(const std::vector<std::string>& outputs,
                          std::size_t slots_per_text) const {
    if (outputs.empty()) throw InputError("count_block needs at least one output");
    ValueCounts counts(attribute_);
    for (const auto& text : outputs) {
      auto sentences = split_sentences(text);
      for (std::size_t s = 0; s < slots_per_text; ++s) {
        if (s < sentences.size())
          counts.add(classify_sentence(sentences[s]));
        else
          counts.add(attribute_.catch_all_index());
      }
    }
    return counts;
  }

 private:
  AttributeSpec attribute_;
  PronounLexicon lexicon_;
};

inline void to_json(json& j, const Extractor& e) {
  j = e.attribute();
  json lexicon = json::object();
  for (const auto& [value, words] : e.lexicon().entries()) lexicon[value] = words;
  j["lexicon"] = lexicon;
}

/// Attribute config document: an attribute plus an optional "lexicon" map
/// from value to word list. Without a lexicon the English gender pronouns are
/// used, which requires He and She to be values.
inline Extractor extractor_from_json(const json& j) {
  auto attribute = attribute_from_json(j);
  if (!j.contains("lexicon")) return Extractor(attribute, PronounLexicon::english_gender(attribute));
  try {
    PronounLexicon::Entries entries;
    for (const auto& value : attribute.values()) {
      if (j.at("lexicon").contains(value))
        entries.emplace_back(value, j.at("lexicon").at(value).get<std::vector<std::string>>());
    }
    if (entries.size() != j.at("lexicon").size())
      throw ConfigError("lexicon names a value that is not part of the attribute");
    return Extractor(attribute, PronounLexicon(attribute, std::move(entries)));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed lexicon: ") + e.what());
  }
}

}  // namespace biasrate
