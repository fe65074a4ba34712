#pragma once

// Report serialization (JSON and Markdown) and loading of the JSON input
// documents the command-line tool consumes.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "biasrate/cache.hpp"
#include "biasrate/composition.hpp"
#include "biasrate/engine.hpp"
#include "biasrate/extraction.hpp"

namespace biasrate {

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Spec documents
// ---------------------------------------------------------------------------

/// Distribution declarations plus the extractor that measures their
/// attribute.
///
///   {"attribute": {"name", "values", "catch_all", "lexicon"?},
///    "specs": [{"label", "kind", "proportions"}, ...]}
struct SpecDocument {
  Extractor extractor = Extractor::english_gender();
  SpecSet specs = SpecSet::reference();
};

inline SpecDocument spec_document_from_json(const json& j) {
  try {
    SpecDocument doc{extractor_from_json(j.at("attribute")), {}};
    for (const auto& item : j.at("specs")) {
      auto spec = distribution_from_json(item, doc.extractor.attribute());
      if (!(spec.attribute() == doc.extractor.attribute()))
        throw SpecError("distribution '" + spec.label() + "' uses a different attribute");
      (spec.kind() == DistributionKind::unbiased ? doc.specs.unbiased : doc.specs.biased)
          .push_back(std::move(spec));
    }
    doc.specs.validate();
    return doc;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed spec document: ") + e.what());
  }
}

inline json spec_document_to_json(const SpecDocument& doc) {
  json specs = json::array();
  for (const auto* group : {&doc.specs.unbiased, &doc.specs.biased})
    for (const auto& s : *group)
      specs.push_back({{"label", s.label()}, {"kind", to_string(s.kind())}, {"proportions", s.proportions()}});
  return json{{"attribute", doc.extractor}, {"specs", specs}};
}

// ---------------------------------------------------------------------------
// Rating report
// ---------------------------------------------------------------------------

inline void to_json(json& j, const Comparison& c) {
  j = json{{"spec_label", c.spec_label}, {"expected", c.expected.counts()}, {"verdict", c.verdict}};
}

inline void to_json(json& j, const StepResult& s) {
  j = json{{"step", to_string(s.step)},
           {"input_spec", s.input_spec},
           {"input_seed", s.input_seed},
           {"input", s.input.counts()},
           {"observed", s.observed.counts()},
           {"comparisons", s.comparisons},
           {"matched_any", s.matched_any}};
}

inline void to_json(json& j, const RatingReport& r) {
  json per_language = json::object();
  json failed = json::object();
  json order = json::array();
  for (const auto& l : r.languages) {
    order.push_back(l.language);
    if (l.rating) {
      per_language[l.language] = {{"rating", *l.rating}, {"steps", l.steps}};
    } else {
      failed[l.language] = {{"error", l.error}, {"network_exhausted", l.network_exhausted}};
    }
  }
  json specs = json::array();
  json unbiased_labels = json::array();
  json biased_labels = json::array();
  for (const auto& s : r.specs.unbiased) {
    specs.push_back(s);
    unbiased_labels.push_back(s.label());
  }
  for (const auto& s : r.specs.biased) {
    specs.push_back(s);
    biased_labels.push_back(s.label());
  }
  json block_seeds = json::array();
  for (std::size_t k = 0; k < 1 + r.specs.biased.size(); ++k) block_seeds.push_back(derive_seed(r.seed, k));

  j = json{{"schema_version", RatingReport::kSchemaVersion},
           {"service_id", r.service_id},
           {"attribute", r.attribute},
           {"middle_languages", order},
           {"per_language", per_language},
           {"failed_languages", failed},
           {"aggregation_mode", to_string(r.aggregation)},
           {"overall", r.overall ? json(*r.overall) : json(nullptr)},
           {"config",
            {{"alpha", r.alpha},
             {"block_size", r.block_size},
             {"slots_per_text", r.slots_per_text},
             {"seed", r.seed},
             {"block_seeds", block_seeds},
             {"home_language", r.home_language},
             {"similarity_test", r.similarity_test},
             {"sentence_template", r.sentence_template},
             {"unbiased_specs", unbiased_labels},
             {"biased_specs", biased_labels}}},
           {"specs", specs},
           {"narrative", r.narrative}};
}

/// Canonical byte form of a report: two-space indentation, sorted keys,
/// trailing newline.
inline std::string report_json_text(const RatingReport& report) {
  return json(report).dump(2) + "\n";
}

/// The parts of a stored report needed to compose it with others.
inline RatedComponent rated_component_from_report(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != RatingReport::kSchemaVersion)
      throw ConfigError("unsupported report schema_version");
    if (j.at("overall").is_null()) throw ConfigError("report carries no overall rating");
    return {j.at("service_id").get<std::string>(), attribute_from_json(j.at("attribute")),
            RatingSet(parse_rating(j.at("overall").get<std::string>()))};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed rating report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Markdown
// ---------------------------------------------------------------------------

namespace detail {

inline std::string counts_row(const std::string& name, const std::vector<ValueCounts::count_type>& counts) {
  std::string row = "| " + name + " |";
  for (auto c : counts) row += " " + std::to_string(c) + " |";
  return row + "\n";
}

inline std::string header_row(const std::string& first, const AttributeSpec& attribute) {
  std::string row = "| " + first + " |";
  std::string rule = "|---|";
  for (const auto& v : attribute.values()) {
    row += " " + v + " |";
    rule += "---:|";
  }
  return row + "\n" + rule + "\n";
}

}  // namespace detail

/// Human-readable rendering: declared specs, then per language the input and
/// output counts of every block, each comparison and the decision path.
inline std::string render_markdown(const RatingReport& r) {
  std::ostringstream md;
  md << "# Bias rating: " << r.service_id << "\n\n";
  md << "- Attribute: " << r.attribute.name() << "\n";
  md << "- Overall (" << to_string(r.aggregation) << "): **"
     << (r.overall ? std::string(to_string(*r.overall)) : std::string("not rated")) << "**\n";
  md << "- Test: " << r.similarity_test << ", alpha " << format_number(r.alpha) << "\n";
  md << "- Blocks: " << r.block_size << " texts x " << r.slots_per_text << " slots, seed " << r.seed
     << "\n\n";

  md << "## Ratings\n\n| Middle language | Rating |\n|---|---|\n";
  for (const auto& l : r.languages)
    md << "| " << l.language << " | " << (l.rating ? std::string(to_string(*l.rating)) : "failed") << " |\n";
  md << "\n## Distributions\n\n";
  {
    std::string row = "| Spec | Kind |";
    std::string rule = "|---|---|";
    for (const auto& v : r.attribute.values()) {
      row += " " + v + " |";
      rule += "---:|";
    }
    md << row << "\n" << rule << "\n";
    for (const auto* group : {&r.specs.unbiased, &r.specs.biased}) {
      for (const auto& s : *group) {
        md << "| " << s.label() << " | " << to_string(s.kind()) << " |";
        for (double p : s.proportions()) md << " " << format_number(p) << " |";
        md << "\n";
      }
    }
  }

  for (const auto& l : r.languages) {
    md << "\n## Middle language: " << l.language << "\n\n";
    if (!l.rating) {
      md << "Not rated: " << l.error << "\n";
      continue;
    }
    md << detail::header_row("Block", r.attribute);
    for (const auto& s : l.steps) {
      md << detail::counts_row(std::string(to_string(s.step)) + " I-" + s.input_spec, s.input.counts());
      md << detail::counts_row(std::string(to_string(s.step)) + " O-" + s.input_spec, s.observed.counts());
    }
    md << "\n| Step | Output of | Compared with | chi2 | df | p | Similar |\n|---|---|---|---:|---:|---:|---|\n";
    for (const auto& s : l.steps) {
      for (const auto& c : s.comparisons) {
        md << "| " << to_string(s.step) << " | " << s.input_spec << " | " << c.spec_label << " | "
           << format_number(c.verdict.statistic, "%.4f") << " | " << c.verdict.degrees_of_freedom
           << " | " << format_number(c.verdict.p_value, "%.4g") << " | "
           << (c.verdict.similar ? "yes" : "no") << " |\n";
      }
    }
    md << "\nDecision: ";
    if (l.steps.front().matched_any) {
      md << "T1 output is similar to a biased spec -> **BS**\n";
    } else if (*l.rating == BiasRating::UCS) {
      md << "T1 output similar to no biased spec; every T2 output similar to an unbiased spec -> **UCS**\n";
    } else {
      md << "T1 output similar to no biased spec; some T2 output similar to no unbiased spec -> **DSBS**\n";
    }
  }
  md << "\n## Narrative\n\n" << r.narrative;
  return md.str();
}

}  // namespace biasrate
