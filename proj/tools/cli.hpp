#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 success, 2 bad configuration or usage, 3 --fail-on gate
// tripped, 4 a service failed to execute (e.g. retries exhausted).

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biasrate/biasrate.hpp"

namespace biasrate::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitGate = 3;
inline constexpr int kExitExecution = 4;

struct CommonOptions {
  std::string specs_file;
  std::string template_file;
  std::string occupations_file;
  std::size_t block_size = 20;
  std::uint64_t seed = 2017;
};

inline SpecDocument load_specs(const CommonOptions& o) {
  if (o.specs_file.empty()) return SpecDocument{};
  return spec_document_from_json(load_json_file(o.specs_file));
}

inline TemplateConfig load_template(const CommonOptions& o) {
  TemplateConfig t;
  if (!o.template_file.empty()) t = template_from_json(load_json_file(o.template_file));
  if (!o.occupations_file.empty()) t.occupations = load_occupations(o.occupations_file);
  return t;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline void write_output(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, content);
}

inline int cmd_generate(const CommonOptions& o, const std::string& out_dir, std::ostream& out) {
  auto doc = load_specs(o);
  auto tmpl = load_template(o);
  std::filesystem::create_directories(out_dir);
  std::size_t texts = 0;
  std::size_t index = 0;
  std::vector<const DistributionSpec*> specs;
  for (const auto& s : doc.specs.unbiased) specs.push_back(&s);
  for (const auto& s : doc.specs.biased) specs.push_back(&s);
  for (const auto* spec : specs) {
    // Same seeds a rating run uses: block 0 for the unbiased input, then one per biased spec.
    auto block = generate_block(*spec, tmpl, o.block_size, derive_seed(o.seed, index++));
    auto path = std::filesystem::path(out_dir) / (path_component(spec->label()) + ".json");
    write_output(path, json(block).dump(2) + "\n");
    out << spec->label() << " (" << to_string(spec->kind()) << "): " << block.texts.size()
        << " texts, slot counts " << block.truth_counts().to_string() << " -> " << path.string() << "\n";
    texts += block.texts.size();
  }
  out << specs.size() << " blocks, " << texts << " texts\n";
  return kExitOk;
}

struct RateOptions {
  std::vector<std::string> services;
  std::string middle;
  double alpha = kDefaultAlpha;
  std::string aggregation = "worst";
  std::string cache_dir;
  std::string out;
  std::string fail_on;
  std::string home = "en";
  std::size_t jobs = 1;
  bool dry_run = false;
};

inline int cmd_rate(const CommonOptions& o, const RateOptions& r, std::ostream& out, std::ostream& err) {
  auto doc = load_specs(o);
  auto middles = split_list(r.middle);
  if (middles.empty()) throw UsageError("--middle needs at least one language");
  RatingConfig config;
  config.alpha = r.alpha;
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
  config.block_size = o.block_size;
  if (config.block_size == 0) throw UsageError("--block-size must be positive");
  config.seed = o.seed;
  config.text_template = load_template(o);
  config.aggregation = parse_aggregation(r.aggregation);
  config.home_language = r.home;
  config.max_parallel_languages = r.jobs;
  std::optional<BiasRating> gate;
  if (!r.fail_on.empty()) gate = parse_rating(r.fail_on);

  std::vector<TranslatorPtr> translators;
  for (const auto& s : r.services) translators.push_back(translator_from_argument(s));

  if (r.dry_run) {
    auto plan = plan_experiment(translators.size(), middles.size(), doc.specs, config.block_size);
    for (const auto& t : translators) out << "service " << t->id() << "\n";
    out << "middle languages: " << middles.size() << "\n"
        << "blocks per language: " << plan.blocks_per_language << " (" << doc.specs.unbiased.size()
        << " unbiased input, " << doc.specs.biased.size() << " biased)\n"
        << "texts per language: " << plan.texts_per_language << "\n"
        << "translations per language: " << plan.calls_per_language << "\n"
        << "planned translation calls: " << plan.total_calls << "\n";
    return kExitOk;
  }
  if (r.out.empty()) throw UsageError("--out is required unless --dry-run is given");

  std::shared_ptr<ResponseCache> cache;
  if (!r.cache_dir.empty())
    cache = std::make_shared<ResponseCache>(r.cache_dir, [&err](const std::string& m) { err << "warning: " << m << "\n"; });

  int code = kExitOk;
  for (auto& t : translators) {
    TranslatorPtr target = cache ? std::make_shared<CachedTranslator>(t, cache) : t;
    auto report = rate_service(target, middles, doc.specs, doc.extractor, config);

    std::string prefix = r.out;
    if (prefix.size() > 5 && prefix.ends_with(".json")) prefix.resize(prefix.size() - 5);
    if (translators.size() > 1) prefix += "-" + path_component(report.service_id);
    write_output(prefix + ".json", report_json_text(report));
    write_output(prefix + ".md", render_markdown(report));

    for (const auto& l : report.languages) {
      out << report.service_id << " " << l.language << ": "
          << (l.rating ? std::string(to_string(*l.rating)) : "failed (" + l.error + ")") << "\n";
    }
    out << report.service_id << " overall: "
        << (report.overall ? std::string(to_string(*report.overall)) : "not rated") << "\n";
    out << "report: " << prefix << ".json, " << prefix << ".md\n";

    if (report.rated().size() != report.languages.size()) {
      code = kExitExecution;
    } else if (gate && report.overall && !preferred(*report.overall, *gate) && code == kExitOk) {
      out << "gate: overall " << to_string(*report.overall) << " is at or below " << to_string(*gate)
          << "\n";
      code = kExitGate;
    }
  }
  return code;
}

/// Each token is a rating, a set literal such as "BS|UCS", or a path to a
/// stored rating report.
inline int cmd_compose(const std::vector<std::string>& tokens, std::ostream& out) {
  if (tokens.size() < 2) throw UsageError("compose needs at least two ratings");
  std::vector<RatedComponent> stages;
  std::optional<AttributeSpec> report_attribute;
  for (const auto& token : tokens) {
    if (token.ends_with(".json")) {
      stages.push_back(rated_component_from_report(load_json_file(token)));
      if (!report_attribute) report_attribute = stages.back().attribute;
    } else {
      stages.push_back({token, gender_attribute(), RatingSet::parse(token)});
    }
  }
  // Bare rating tokens carry no attribute of their own; they take the reports' one.
  for (std::size_t i = 0; i < stages.size(); ++i)
    if (report_attribute && !tokens[i].ends_with(".json")) stages[i].attribute = *report_attribute;
  out << compose_chain(std::span<const RatedComponent>(stages)).to_string() << "\n";
  return kExitOk;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Black-box bias rating of text services", "biasrate"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&common](CLI::App* cmd) {
    cmd->add_option("--specs", common.specs_file, "Distribution spec document (JSON)");
    cmd->add_option("--template", common.template_file, "Text template config (JSON)");
    cmd->add_option("--occupations", common.occupations_file, "Occupation list, one per line");
    cmd->add_option("--block-size", common.block_size, "Texts per data block")->capture_default_str();
    cmd->add_option("--seed", common.seed, "Base seed for data generation")->capture_default_str();
  };

  auto* generate = app.add_subcommand("generate", "Write one data block per distribution spec");
  add_common(generate);
  std::string out_dir;
  generate->add_option("--out", out_dir, "Output directory")->required();

  auto* rate = app.add_subcommand("rate", "Rate a translation service by round trips");
  add_common(rate);
  RateOptions ro;
  rate->add_option("--service", ro.services, "mock:<behavior> or a service config file (repeatable)")
      ->required();
  rate->add_option("--middle", ro.middle, "Comma-separated middle languages")->required();
  rate->add_option("--alpha", ro.alpha, "Significance level")->capture_default_str();
  rate->add_option("--aggregation", ro.aggregation, "worst or vote")->capture_default_str();
  rate->add_option("--cache", ro.cache_dir, "Response cache directory");
  rate->add_option("--out", ro.out, "Report path prefix; writes <prefix>.json and <prefix>.md");
  rate->add_option("--fail-on", ro.fail_on, "Exit 3 if the overall rating is at or below this");
  rate->add_option("--home", ro.home, "Home language")->capture_default_str();
  rate->add_option("--jobs", ro.jobs, "Middle languages rated concurrently")->capture_default_str();
  rate->add_flag("--dry-run", ro.dry_run, "Print the planned call volume and exit");

  auto* compose = app.add_subcommand("compose", "Rate a sequential pipeline from its stages");
  std::vector<std::string> tokens;
  compose->add_option("ratings", tokens, "Stage ratings, set literals or report files")->required();

  std::vector<const char*> argv{"biasrate"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*generate) return cmd_generate(common, out_dir, out);
    if (*rate) return cmd_rate(common, ro, out, err);
    if (*compose) return cmd_compose(tokens, out);
  } catch (const ExecutionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitExecution;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace biasrate::cli
