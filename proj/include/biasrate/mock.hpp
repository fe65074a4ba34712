#pragma once

// Offline translators with analytically predictable bias behavior.

#include <cctype>
#include <cstdint>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "biasrate/extraction.hpp"
#include "biasrate/services.hpp"

namespace biasrate {

struct MockBehavior {
  enum class Kind { identity, collapse_to, equalize, flip };

  Kind kind = Kind::identity;
  std::string target;  // collapse_to only

  static MockBehavior identity() { return {Kind::identity, {}}; }
  static MockBehavior collapse_to(std::string value) { return {Kind::collapse_to, std::move(value)}; }
  static MockBehavior equalize() { return {Kind::equalize, {}}; }
  static MockBehavior flip() { return {Kind::flip, {}}; }

  /// "identity", "equalize", "flip", "collapse_to:He", "collapse_to(He)".
  /// A bare "collapse" or "collapse_to" collapses to He.
  static MockBehavior parse(std::string_view text) {
    if (text == "identity") return identity();
    if (text == "equalize") return equalize();
    if (text == "flip") return flip();
    if (text == "collapse" || text == "collapse_to") return collapse_to("He");
    for (std::string_view prefix : {"collapse_to:", "collapse:", "collapse_to("}) {
      if (text.substr(0, prefix.size()) != prefix) continue;
      auto rest = text.substr(prefix.size());
      if (prefix.back() == '(') {
        if (rest.empty() || rest.back() != ')') break;
        rest.remove_suffix(1);
      }
      if (rest.empty()) break;
      return collapse_to(std::string(rest));
    }
    throw ConfigError("unknown mock behavior '" + std::string(text) + "'");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::identity: return "identity";
      case Kind::equalize: return "equalize";
      case Kind::flip: return "flip";
      case Kind::collapse_to: return "collapse_to:" + target;
    }
    return "?";
  }
};

/// The eight middle languages of the reference experiment plus English.
inline std::vector<std::string> default_mock_languages() {
  return {"en", "ar", "es", "fr", "hi", "it", "pt", "ru", "tr"};
}

/// Deterministic stand-in for a translation API. Only the leg that translates
/// back into the home language rewrites pronouns; the outbound leg passes text
/// through. A round trip therefore applies the behavior exactly once.
///
///  - identity:       text unchanged
///  - collapse_to(v): every lexicon word of another value becomes v's nominative
///  - flip:           the two values' nominatives are swapped (needs exactly two)
///  - equalize:       every lexicon word is replaced by the nominative of the
///                    next value in rotation; the rotation restarts at the first
///                    value on begin_block()
class MockTranslator final : public TranslationService {
 public:
  MockTranslator(MockBehavior behavior, std::uint64_t seed = 0,
                 Extractor extractor = Extractor::english_gender(), std::string home = "en",
                 std::vector<std::string> languages = default_mock_languages())
      : behavior_(std::move(behavior)),
        seed_(seed),
        extractor_(std::move(extractor)),
        home_(std::move(home)),
        languages_(std::move(languages)) {
    const auto& entries = extractor_.lexicon().entries();
    if (behavior_.kind == MockBehavior::Kind::collapse_to) {
      extractor_.lexicon().nominative(behavior_.target);  // throws if unknown
    }
    if (behavior_.kind == MockBehavior::Kind::flip && entries.size() != 2)
      throw ConfigError("flip mock needs exactly two lexicon values");
    if (behavior_.kind == MockBehavior::Kind::equalize && entries.empty())
      throw ConfigError("equalize mock needs a lexicon");
    id_ = "mock-" + behavior_.to_string();
    for (auto& c : id_)
      if (c == ':') c = '-';
  }

  const std::string& id() const override { return id_; }
  std::vector<std::string> supported_languages() const override { return languages_; }
  const MockBehavior& behavior() const noexcept { return behavior_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::string translate(const std::string& text, const std::string& source,
                        const std::string& target) override {
    if (!supports(source, target))
      throw ExecutionError(id_ + " does not support " + source + " -> " + target);
    if (target != home_ || behavior_.kind == MockBehavior::Kind::identity) return text;
    std::lock_guard lock(mutex_);
    return rewrite(text);
  }

  void begin_block() override {
    std::lock_guard lock(mutex_);
    rotation_ = 0;
  }

  bool concurrent_safe() const override { return behavior_.kind != MockBehavior::Kind::equalize; }

 private:
  // Carries the capitalization of `original` over to `word`.
  static std::string match_case(std::string_view original, const std::string& word) {
    std::string out = word;
    const bool all_upper = original.size() > 1 && std::all_of(original.begin(), original.end(), [](char c) {
                             return std::isupper(static_cast<unsigned char>(c)) != 0;
                           });
    if (all_upper) {
      for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    } else if (!original.empty() && std::isupper(static_cast<unsigned char>(original.front())) && !out.empty()) {
      out.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(out.front())));
    }
    return out;
  }

  std::string rewrite(const std::string& text) {
    const auto& lexicon = extractor_.lexicon();
    const auto& entries = lexicon.entries();
    std::string out;
    std::size_t copied = 0;
    for_each_word(text, [&](std::size_t off, std::size_t len) {
      std::string_view word(text.data() + off, len);
      auto value = lexicon.value_of(word);
      if (!value) return;
      std::optional<std::string> replacement;
      switch (behavior_.kind) {
        case MockBehavior::Kind::collapse_to:
          if (*value != behavior_.target) replacement = lexicon.nominative(behavior_.target);
          break;
        case MockBehavior::Kind::flip: {
          const auto lowered = PronounLexicon::lower(word);
          if (lowered == entries[0].second.front()) replacement = entries[1].second.front();
          else if (lowered == entries[1].second.front()) replacement = entries[0].second.front();
          break;
        }
        case MockBehavior::Kind::equalize:
          replacement = entries[rotation_ % entries.size()].second.front();
          ++rotation_;
          break;
        case MockBehavior::Kind::identity:
          break;
      }
      if (!replacement) return;
      out.append(text, copied, off - copied);
      out += match_case(word, *replacement);
      copied = off + len;
    });
    out.append(text, copied, std::string::npos);
    return out;
  }

  MockBehavior behavior_;
  std::uint64_t seed_;
  Extractor extractor_;
  std::string home_;
  std::vector<std::string> languages_;
  std::string id_;
  std::mutex mutex_;
  std::size_t rotation_ = 0;
};

inline TranslatorPtr mock_translator(MockBehavior behavior, std::uint64_t seed = 0) {
  return std::make_shared<MockTranslator>(std::move(behavior), seed);
}

}  // namespace biasrate
