#pragma once

// Generic HTTP translation adapter with request pacing, a concurrency cap and
// retries with exponential backoff.

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>

#include "biasrate/core.hpp"
#include "biasrate/services.hpp"

namespace biasrate {

struct HttpAdapterConfig {
  std::string base_url;
  std::string http_method = "POST";
  /// Placeholders {text}, {source}, {target}, {key}. For GET this is the query
  /// string; for POST it is the body, JSON if it starts with '{' or '[',
  /// form-encoded otherwise. Substituted values are escaped accordingly.
  std::string request_template;
  /// Dot path into the response document; numeric segments index arrays.
  std::string response_path;
  /// Environment variable holding the credential. Empty when none is needed.
  std::string key_env;
  long long min_interval_ms = 0;
  int max_retries = 3;
  int max_concurrency = 1;
  long long backoff_initial_ms = 500;
  long long timeout_ms = 30000;
  /// Extra request headers; values accept the same placeholders.
  std::map<std::string, std::string> headers;

  void validate() const {
    if (base_url.empty()) throw ConfigError("http adapter needs a base_url");
    if (http_method != "GET" && http_method != "POST")
      throw ConfigError("http_method must be GET or POST, got '" + http_method + "'");
    if (response_path.empty()) throw ConfigError("http adapter needs a response_path");
    if (min_interval_ms < 0) throw ConfigError("min_interval_ms must be >= 0");
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (backoff_initial_ms < 0) throw ConfigError("backoff_initial_ms must be >= 0");
    if (timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
  }
};

inline void to_json(json& j, const HttpAdapterConfig& c) {
  j = json{{"base_url", c.base_url},
           {"http_method", c.http_method},
           {"request_template", c.request_template},
           {"response_path", c.response_path},
           {"key_env", c.key_env},
           {"min_interval_ms", c.min_interval_ms},
           {"max_retries", c.max_retries},
           {"max_concurrency", c.max_concurrency},
           {"backoff_initial_ms", c.backoff_initial_ms},
           {"timeout_ms", c.timeout_ms},
           {"headers", c.headers}};
}

inline HttpAdapterConfig http_config_from_json(const json& j) {
  HttpAdapterConfig c;
  try {
    c.base_url = j.at("base_url");
    c.http_method = j.value("http_method", c.http_method);
    c.request_template = j.value("request_template", c.request_template);
    c.response_path = j.at("response_path");
    c.key_env = j.value("key_env", c.key_env);
    c.min_interval_ms = j.value("min_interval_ms", c.min_interval_ms);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    if (j.contains("headers")) c.headers = j.at("headers").get<std::map<std::string, std::string>>();
    if (j.contains("key")) throw ConfigError("credentials must come from key_env, not the config file");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed http adapter config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

struct HttpRequest {
  std::string method;
  std::string url;  // scheme://host[:port]/path[?query]
  std::map<std::string, std::string> headers;
  std::string body;
  std::string content_type;
  long long timeout_ms = 30000;
};

struct HttpResponse {
  int status = 0;  // 0: the request never completed
  std::string body;
  std::string error;
};

using HttpTransport = std::function<HttpResponse(const HttpRequest&)>;

/// Splits "https://host:port/a/b?c" into ("https://host:port", "/a/b?c").
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("url '" + url + "' has no scheme");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// Real network transport backed by cpp-httplib.
inline HttpTransport httplib_transport() {
  return [](const HttpRequest& request) -> HttpResponse {
    auto [origin, path] = split_url(request.url);
    httplib::Client client(origin);
    if (!client.is_valid()) return {0, {}, "unsupported url '" + request.url + "'"};
    const auto seconds = static_cast<time_t>(request.timeout_ms / 1000);
    const auto micros = static_cast<time_t>((request.timeout_ms % 1000) * 1000);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    httplib::Headers headers(request.headers.begin(), request.headers.end());
    auto result = request.method == "GET"
                      ? client.Get(path, headers)
                      : client.Post(path, headers, request.body, request.content_type);
    if (!result) return {0, {}, httplib::to_string(result.error())};
    return {result->status, result->body, {}};
  };
}

// ---------------------------------------------------------------------------
// Pacing
// ---------------------------------------------------------------------------

/// Admits at most `max_concurrency` requests at a time and spaces successive
/// request starts by at least `min_interval`.
class RequestGate {
 public:
  using Clock = std::chrono::steady_clock;

  RequestGate(int max_concurrency, std::chrono::milliseconds min_interval)
      : max_concurrency_(max_concurrency), min_interval_(min_interval) {}

  class Ticket {
   public:
    explicit Ticket(RequestGate& gate) : gate_(&gate) {}
    Ticket(Ticket&& other) noexcept : gate_(std::exchange(other.gate_, nullptr)) {}
    Ticket(const Ticket&) = delete;
    Ticket& operator=(const Ticket&) = delete;
    Ticket& operator=(Ticket&&) = delete;
    ~Ticket() {
      if (gate_) gate_->release();
    }

   private:
    RequestGate* gate_;
  };

  [[nodiscard]] Ticket acquire() {
    Clock::time_point start;
    {
      std::unique_lock lock(mutex_);
      slot_free_.wait(lock, [&] { return in_flight_ < max_concurrency_; });
      ++in_flight_;
      start = std::max(Clock::now(), next_start_);
      next_start_ = start + min_interval_;
    }
    std::this_thread::sleep_until(start);
    return Ticket(*this);
  }

 private:
  void release() {
    {
      std::lock_guard lock(mutex_);
      --in_flight_;
    }
    slot_free_.notify_one();
  }

  std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
  int max_concurrency_;
  std::chrono::milliseconds min_interval_;
  Clock::time_point next_start_{};
};

// ---------------------------------------------------------------------------
// Template rendering and response parsing
// ---------------------------------------------------------------------------

inline std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

inline std::string json_escape(std::string_view s) {
  auto quoted = json(std::string(s)).dump();
  return quoted.substr(1, quoted.size() - 2);
}

inline std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values,
                              const std::function<std::string(std::string_view)>& escape) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += escape(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

/// Follows "a.b.0.c" through objects and arrays.
inline const json& follow_path(const json& doc, std::string_view path) {
  const json* node = &doc;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('.', start);
    if (end == std::string_view::npos) end = path.size();
    std::string segment(path.substr(start, end - start));
    if (node->is_array()) {
      char* tail = nullptr;
      auto index = std::strtoul(segment.c_str(), &tail, 10);
      if (segment.empty() || *tail != '\0' || index >= node->size())
        throw ExecutionError("response path segment '" + segment + "' is not a valid index");
      node = &(*node)[index];
    } else if (node->is_object() && node->contains(segment)) {
      node = &(*node)[segment];
    } else {
      throw ExecutionError("response has no field '" + segment + "'");
    }
    start = end + 1;
  }
  return *node;
}

// ---------------------------------------------------------------------------
// Adapter
// ---------------------------------------------------------------------------

/// A translation API reached over HTTP. Safe to share between threads; pacing
/// and the concurrency cap apply across all callers.
class HttpTranslator final : public TranslationService {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  HttpTranslator(std::string id, HttpAdapterConfig config, std::vector<std::string> languages = {},
                 HttpTransport transport = httplib_transport(), Sleeper sleeper = {})
      : id_(std::move(id)),
        config_(std::move(config)),
        languages_(std::move(languages)),
        transport_(std::move(transport)),
        sleeper_(sleeper ? std::move(sleeper)
                         : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
        gate_(config_.max_concurrency, std::chrono::milliseconds(config_.min_interval_ms)) {
    if (id_.empty()) throw ConfigError("service id must not be empty");
    config_.validate();
    if (!config_.key_env.empty()) {
      const char* key = std::getenv(config_.key_env.c_str());
      if (key == nullptr || *key == '\0')
        throw ConfigError("environment variable " + config_.key_env + " holding the credential is not set");
      key_ = key;
    }
  }

  const std::string& id() const override { return id_; }
  std::vector<std::string> supported_languages() const override { return languages_; }
  const HttpAdapterConfig& config() const noexcept { return config_; }

  HttpRequest build_request(const std::string& text, const std::string& source,
                            const std::string& target) const {
    const std::map<std::string, std::string> values = {
        {"text", text}, {"source", source}, {"target", target}, {"key", key_}};
    HttpRequest request;
    request.method = config_.http_method;
    request.timeout_ms = config_.timeout_ms;
    auto raw = [](std::string_view s) { return std::string(s); };
    for (const auto& [name, value] : config_.headers) request.headers[name] = substitute(value, values, raw);
    if (config_.http_method == "GET") {
      request.url = config_.base_url;
      if (!config_.request_template.empty()) {
        request.url += config_.base_url.find('?') == std::string::npos ? '?' : '&';
        request.url += substitute(config_.request_template, values, url_encode);
      }
    } else {
      request.url = config_.base_url;
      const auto first = config_.request_template.find_first_not_of(" \t\r\n");
      const bool is_json = first != std::string::npos &&
                           (config_.request_template[first] == '{' || config_.request_template[first] == '[');
      request.content_type = is_json ? "application/json" : "application/x-www-form-urlencoded";
      request.body = substitute(config_.request_template, values,
                                is_json ? std::function<std::string(std::string_view)>(json_escape)
                                        : std::function<std::string(std::string_view)>(url_encode));
    }
    return request;
  }

  std::string translate(const std::string& text, const std::string& source,
                        const std::string& target) override {
    if (!supports(source, target))
      throw ExecutionError(id_ + " does not support " + source + " -> " + target);
    const auto request = build_request(text, source, target);
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        sleeper_(std::chrono::milliseconds(config_.backoff_initial_ms << std::min(attempt - 1, 20)));
      }
      HttpResponse response;
      {
        auto ticket = gate_.acquire();
        try {
          response = transport_(request);
        } catch (const std::exception& e) {
          response = {0, {}, e.what()};
        }
      }
      if (response.status >= 200 && response.status < 300) return parse_response(response.body, text);
      last_error = response.status == 0 ? response.error
                                        : "HTTP " + std::to_string(response.status) + ": " +
                                              response.body.substr(0, 200);
      const bool retryable = response.status == 0 || response.status == 408 ||
                             response.status == 429 || response.status >= 500;
      if (!retryable) throw ExecutionError(id_ + " request rejected: " + last_error);
    }
    throw NetworkExhaustedError(id_ + " failed after " + std::to_string(config_.max_retries + 1) +
                                " attempts: " + last_error);
  }

 private:
  std::string parse_response(const std::string& body, const std::string& input) const {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::exception& e) {
      throw ExecutionError(id_ + " returned a non-JSON response: " + e.what());
    }
    const auto& node = follow_path(doc, config_.response_path);
    if (!node.is_string()) throw ExecutionError(id_ + " response path does not hold a string");
    auto out = node.get<std::string>();
    if (out.empty() && !input.empty()) throw ExecutionError(id_ + " returned an empty translation");
    return out;
  }

  std::string id_;
  HttpAdapterConfig config_;
  std::vector<std::string> languages_;
  HttpTransport transport_;
  Sleeper sleeper_;
  RequestGate gate_;
  std::string key_;
};

}  // namespace biasrate
