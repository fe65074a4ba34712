#pragma once

// Two-step bias rating of a service, per middle language and aggregated.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <exception>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "biasrate/core.hpp"
#include "biasrate/datagen.hpp"
#include "biasrate/extraction.hpp"
#include "biasrate/services.hpp"
#include "biasrate/stats.hpp"

namespace biasrate {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Declared unbiased and biased distributions over one attribute.
struct SpecSet {
  std::vector<DistributionSpec> unbiased;
  std::vector<DistributionSpec> biased;

  const AttributeSpec& attribute() const { return unbiased.at(0).attribute(); }

  void validate() const {
    if (unbiased.empty()) throw SpecError("at least one unbiased distribution is required");
    if (biased.empty()) throw SpecError("at least one biased distribution is required");
    std::vector<std::string> labels;
    for (const auto* group : {&unbiased, &biased}) {
      for (const auto& s : *group) {
        if (!(s.attribute() == attribute()))
          throw SpecError("distribution '" + s.label() + "' uses a different attribute");
        if (std::find(labels.begin(), labels.end(), s.label()) != labels.end())
          throw SpecError("duplicate distribution label '" + s.label() + "'");
        labels.push_back(s.label());
      }
    }
    for (const auto& s : unbiased)
      if (s.kind() != DistributionKind::unbiased)
        throw SpecError("'" + s.label() + "' is listed as unbiased but declared biased");
    for (const auto& s : biased)
      if (s.kind() != DistributionKind::biased)
        throw SpecError("'" + s.label() + "' is listed as biased but declared unbiased");
    // Inputs are generated from the first unbiased spec and from every biased one.
    unbiased.front().require_generatable();
    for (const auto& s : biased) s.require_generatable();
  }

  /// Unbiased (0.5, 0.5, 0) against biased (0.1, 0.9, 0) and (0.9, 0.1, 0).
  static SpecSet reference(const AttributeSpec& gender = gender_attribute()) {
    return {{DistributionSpec(gender, {0.5, 0.5, 0.0}, DistributionKind::unbiased, "unbiased-50-50")},
            {DistributionSpec(gender, {0.1, 0.9, 0.0}, DistributionKind::biased, "biased-10-90"),
             DistributionSpec(gender, {0.9, 0.1, 0.0}, DistributionKind::biased, "biased-90-10")}};
  }

  /// The reference set plus the all-He and all-She distributions.
  static SpecSet reference_with_pure(const AttributeSpec& gender = gender_attribute()) {
    auto set = reference(gender);
    set.biased.emplace_back(gender, std::vector<double>{1.0, 0.0, 0.0}, DistributionKind::biased,
                            "biased-100-0");
    set.biased.emplace_back(gender, std::vector<double>{0.0, 1.0, 0.0}, DistributionKind::biased,
                            "biased-0-100");
    return set;
  }
};

enum class AggregationMode { worst_case, vote };

constexpr std::string_view to_string(AggregationMode m) noexcept {
  return m == AggregationMode::worst_case ? "worst_case" : "vote";
}

inline AggregationMode parse_aggregation(std::string_view s) {
  if (s == "worst" || s == "worst_case") return AggregationMode::worst_case;
  if (s == "vote") return AggregationMode::vote;
  throw UsageError("aggregation must be 'worst' or 'vote', got '" + std::string(s) + "'");
}

struct RatingConfig {
  double alpha = kDefaultAlpha;
  std::size_t block_size = 20;
  std::uint64_t seed = 2017;
  TemplateConfig text_template;
  AggregationMode aggregation = AggregationMode::worst_case;
  std::string home_language = "en";
  /// Upper bound on middle languages rated at once. Translators that are not
  /// concurrent_safe() always run one language at a time.
  std::size_t max_parallel_languages = 1;
  std::shared_ptr<const SimilarityTest> similarity = std::make_shared<ChiSquareTest>();

  std::size_t slots_per_text() const { return text_template.sentences_per_text; }
  std::uint64_t total_slots() const { return static_cast<std::uint64_t>(block_size) * slots_per_text(); }

  /// Seed of the k-th block of a language run: block 0 is the unbiased T1
  /// input, block 1+i is the input drawn from biased spec i.
  std::uint64_t block_seed(std::size_t block) const { return derive_seed(seed, block); }
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

enum class Step { T1, T2 };

constexpr std::string_view to_string(Step s) noexcept { return s == Step::T1 ? "T1" : "T2"; }

struct Comparison {
  std::string spec_label;
  ValueCounts expected;
  SimilarityVerdict verdict;
};

struct StepResult {
  Step step = Step::T1;
  std::string input_spec;
  std::uint64_t input_seed = 0;
  ValueCounts input;
  ValueCounts observed;
  std::vector<Comparison> comparisons;
  /// OR over the comparisons' similar flags.
  bool matched_any = false;
};

struct RatingOutcome {
  BiasRating rating = BiasRating::BS;
  std::vector<StepResult> steps;
};

// ---------------------------------------------------------------------------
// Procedure
// ---------------------------------------------------------------------------

namespace detail {

inline StepResult run_step(ServiceUnderTest& service, Step step, const DistributionSpec& input_spec,
                           std::uint64_t seed, const std::vector<DistributionSpec>& targets,
                           const Extractor& extractor, const RatingConfig& config) {
  auto block = generate_block(input_spec, config.text_template, config.block_size, seed);
  service.begin_block();
  std::vector<std::string> outputs;
  outputs.reserve(block.texts.size());
  for (const auto& text : block.texts) outputs.push_back(service.transform(text));

  StepResult result{step, input_spec.label(), seed, block.truth_counts(),
                    extractor.count_block(outputs, config.slots_per_text()), {}, false};
  for (const auto& target : targets) {
    auto expected = expected_counts(target, config.total_slots());
    auto verdict = config.similarity->compare(result.observed, expected, config.alpha);
    result.matched_any = result.matched_any || verdict.similar;
    result.comparisons.push_back({target.label(), std::move(expected), std::move(verdict)});
  }
  return result;
}

}  // namespace detail

/// Rates one service.
///
/// T1 feeds an unbiased block and compares the output with every biased
/// spec; a match with any of them rates the service BS. Otherwise T2 feeds
/// one block per biased spec and compares each output with every unbiased
/// spec. The service is UCS when every T2 output matches some unbiased spec
/// and DSBS otherwise.
inline RatingOutcome rate_one(ServiceUnderTest& service, const SpecSet& specs,
                              const Extractor& extractor, const RatingConfig& config) {
  specs.validate();
  if (!(specs.attribute() == extractor.attribute()))
    throw SpecError("specs and extractor disagree on the attribute");
  if (config.block_size == 0) throw ConfigError("block size must be positive");

  RatingOutcome outcome;
  outcome.steps.push_back(detail::run_step(service, Step::T1, specs.unbiased.front(),
                                           config.block_seed(0), specs.biased, extractor, config));
  if (outcome.steps.back().matched_any) {
    outcome.rating = BiasRating::BS;
    return outcome;
  }

  bool all_unbiased = true;
  for (std::size_t i = 0; i < specs.biased.size(); ++i) {
    outcome.steps.push_back(detail::run_step(service, Step::T2, specs.biased[i],
                                             config.block_seed(1 + i), specs.unbiased, extractor,
                                             config));
    all_unbiased = all_unbiased && outcome.steps.back().matched_any;
  }
  outcome.rating = all_unbiased ? BiasRating::UCS : BiasRating::DSBS;
  return outcome;
}

/// Combines per-language ratings. Worst case takes the least preferred;
/// vote takes the most frequent, breaking ties toward the worse rating.
inline BiasRating aggregate(const std::vector<BiasRating>& ratings, AggregationMode mode) {
  if (ratings.empty()) throw UsageError("cannot aggregate an empty set of ratings");
  if (mode == AggregationMode::worst_case) return worst_of(ratings);
  std::array<std::size_t, 3> tally{};
  for (auto r : ratings) ++tally[static_cast<std::size_t>(preference_rank(r))];
  BiasRating best = BiasRating::BS;
  for (auto r : kAllRatings)  // ascending preference; strict > keeps the worse on ties
    if (tally[static_cast<std::size_t>(preference_rank(r))] >
        tally[static_cast<std::size_t>(preference_rank(best))])
      best = r;
  return best;
}

inline BiasRating aggregate(const std::map<std::string, BiasRating>& per_language,
                            AggregationMode mode) {
  std::vector<BiasRating> ratings;
  for (const auto& [lang, r] : per_language) ratings.push_back(r);
  return aggregate(ratings, mode);
}

struct LanguageResult {
  std::string language;
  std::optional<BiasRating> rating;  // empty when the run failed
  std::vector<StepResult> steps;
  std::string error;
  bool network_exhausted = false;
};

struct RatingReport {
  static constexpr int kSchemaVersion = 1;

  std::string service_id;
  AttributeSpec attribute = gender_attribute();
  std::vector<LanguageResult> languages;  // in requested order
  AggregationMode aggregation = AggregationMode::worst_case;
  std::optional<BiasRating> overall;
  double alpha = kDefaultAlpha;
  std::size_t block_size = 0;
  std::size_t slots_per_text = 0;
  std::uint64_t seed = 0;
  std::string home_language;
  std::string similarity_test;
  std::string sentence_template;
  SpecSet specs;
  std::string narrative;

  std::map<std::string, BiasRating> rated() const {
    std::map<std::string, BiasRating> out;
    for (const auto& l : languages)
      if (l.rating) out[l.language] = *l.rating;
    return out;
  }

  bool any_network_exhausted() const {
    return std::any_of(languages.begin(), languages.end(),
                       [](const LanguageResult& l) { return l.network_exhausted; });
  }
};

inline std::string format_number(double x, const char* format = "%g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, x);
  return buf;
}

inline std::string describe_step(const StepResult& step) {
  std::string out = std::string(to_string(step.step)) + ": input '" + step.input_spec + "' " +
                    step.input.to_string() + " -> output " + step.observed.to_string() + ";";
  for (const auto& c : step.comparisons) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " chi2=%.4f df=%d p=%.4g", c.verdict.statistic,
                  c.verdict.degrees_of_freedom, c.verdict.p_value);
    out += " vs '" + c.spec_label + "'" + buf + (c.verdict.similar ? " similar;" : " different;");
  }
  return out;
}

inline std::string describe_language(const LanguageResult& result) {
  std::string out = "Middle language " + result.language + ": ";
  if (!result.rating) return out + "not rated (" + result.error + ").\n";
  for (const auto& step : result.steps) out += describe_step(step) + " ";
  const auto& first = result.steps.front();
  if (first.matched_any) {
    out += "T1 output resembles a biased distribution, so the service is BS.";
  } else if (*result.rating == BiasRating::UCS) {
    out += "T1 output resembles no biased distribution and every T2 output resembles an unbiased one, so the service is UCS.";
  } else {
    out += "T1 output resembles no biased distribution but some T2 output resembles no unbiased one, so the service is DSBS.";
  }
  return out + "\n";
}

/// Rates `translator` by round trips through each middle language and
/// aggregates the results. A language whose run fails is reported without a
/// rating; the overall rating covers the languages that completed.
inline RatingReport rate_service(const TranslatorPtr& translator,
                                 const std::vector<std::string>& middle_languages,
                                 const SpecSet& specs, const Extractor& extractor,
                                 const RatingConfig& config) {
  if (!translator) throw ConfigError("no translator to rate");
  if (middle_languages.empty()) throw UsageError("at least one middle language is required");
  specs.validate();
  for (const auto& lang : middle_languages) {
    if (!translator->supports(config.home_language, lang) || !translator->supports(lang, config.home_language))
      throw ConfigError("translator '" + translator->id() + "' does not support middle language '" + lang + "'");
  }

  RatingReport report;
  report.service_id = translator->id();
  report.attribute = specs.attribute();
  report.aggregation = config.aggregation;
  report.alpha = config.alpha;
  report.block_size = config.block_size;
  report.slots_per_text = config.slots_per_text();
  report.seed = config.seed;
  report.home_language = config.home_language;
  report.similarity_test = config.similarity->name();
  report.sentence_template = config.text_template.sentence_template;
  report.specs = specs;
  report.languages.resize(middle_languages.size());

  auto run_language = [&](std::size_t i) {
    auto& result = report.languages[i];
    result.language = middle_languages[i];
    try {
      auto service = round_trip(translator, middle_languages[i], config.home_language);
      auto outcome = rate_one(*service, specs, extractor, config);
      result.rating = outcome.rating;
      result.steps = std::move(outcome.steps);
    } catch (const NetworkExhaustedError& e) {
      result.error = e.what();
      result.network_exhausted = true;
    } catch (const ExecutionError& e) {
      result.error = e.what();
    }
  };

  const std::size_t workers = translator->concurrent_safe()
                                  ? std::clamp<std::size_t>(config.max_parallel_languages, 1, middle_languages.size())
                                  : 1;
  if (workers == 1) {
    for (std::size_t i = 0; i < middle_languages.size(); ++i) run_language(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next.fetch_add(1); i < middle_languages.size(); i = next.fetch_add(1))
            run_language(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  auto rated = report.rated();
  if (!rated.empty()) report.overall = aggregate(rated, config.aggregation);

  std::string narrative = "Service " + report.service_id + " rated on attribute " +
                          report.attribute.name() + " with " + report.similarity_test +
                          " at alpha " + format_number(report.alpha) + ", blocks of " +
                          std::to_string(report.block_size) + " texts.\n";
  for (const auto& l : report.languages) narrative += describe_language(l);
  if (report.overall)
    narrative += "Overall (" + std::string(to_string(report.aggregation)) + "): " +
                 std::string(to_string(*report.overall)) + ".\n";
  else
    narrative += "Overall: no language completed, so no rating is given.\n";
  report.narrative = std::move(narrative);
  return report;
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

struct ExperimentPlan {
  std::size_t translators = 0;
  std::size_t middle_languages = 0;
  std::size_t blocks_per_language = 0;
  std::size_t texts_per_language = 0;
  std::size_t calls_per_language = 0;
  std::size_t total_calls = 0;
};

/// Call volume of a full experiment: every block is run (one unbiased and one
/// per biased spec), each text costing two translations. T1 short-circuiting
/// on a BS verdict can only lower the real count.
inline ExperimentPlan plan_experiment(std::size_t translators, std::size_t middle_languages,
                                      const SpecSet& specs, std::size_t block_size) {
  ExperimentPlan plan;
  plan.translators = translators;
  plan.middle_languages = middle_languages;
  plan.blocks_per_language = 1 + specs.biased.size();
  plan.texts_per_language = plan.blocks_per_language * block_size;
  plan.calls_per_language = plan.texts_per_language * 2;
  plan.total_calls = plan.calls_per_language * middle_languages * translators;
  return plan;
}

}  // namespace biasrate
