#pragma once

// Building translators from service config documents.
//
//   {"id": "...", "type": "http" | "mock",
//    "http": {HttpAdapterConfig}, "mock": {"behavior": "...", "seed": 0},
//    "supported_languages": [...]}

#include <filesystem>
#include <string>
#include <vector>

#include "biasrate/http.hpp"
#include "biasrate/mock.hpp"
#include "biasrate/report.hpp"

namespace biasrate {

inline TranslatorPtr translator_from_json(const json& j, HttpTransport transport = httplib_transport()) {
  try {
    const auto type = j.at("type").get<std::string>();
    auto languages = j.value("supported_languages", std::vector<std::string>{});
    if (type == "mock") {
      const auto& mock = j.at("mock");
      auto behavior = MockBehavior::parse(mock.at("behavior").get<std::string>());
      auto seed = mock.value("seed", std::uint64_t{0});
      if (languages.empty()) languages = default_mock_languages();
      return std::make_shared<MockTranslator>(behavior, seed, Extractor::english_gender(), "en",
                                              std::move(languages));
    }
    if (type == "http") {
      return std::make_shared<HttpTranslator>(j.at("id").get<std::string>(),
                                              http_config_from_json(j.at("http")),
                                              std::move(languages), std::move(transport));
    }
    throw ConfigError("service type must be 'http' or 'mock', got '" + type + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed service config: ") + e.what());
  }
}

/// "mock:<behavior>" shorthand or a path to a service config file.
inline TranslatorPtr translator_from_argument(const std::string& argument) {
  if (argument.rfind("mock:", 0) == 0)
    return mock_translator(MockBehavior::parse(argument.substr(5)));
  return translator_from_json(load_json_file(argument));
}

}  // namespace biasrate
