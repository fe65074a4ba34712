#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "biasrate/factory.hpp"
#include "biasrate/http.hpp"

namespace biasrate {
namespace {

using namespace std::chrono_literals;

HttpAdapterConfig basic_config() {
  HttpAdapterConfig c;
  c.base_url = "http://translate.invalid/v1";
  c.request_template = R"({"q": "{text}", "source": "{source}", "target": "{target}"})";
  c.response_path = "data.translations.0.text";
  c.max_retries = 3;
  c.backoff_initial_ms = 100;
  return c;
}

std::string ok_body(const std::string& text) {
  return json{{"data", {{"translations", json::array({{{"text", text}}})}}}}.dump();
}

struct Recorder {
  std::vector<std::chrono::milliseconds> sleeps;
  HttpTranslator::Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
  }
};

TEST(HttpConfig, JsonRoundTripAndValidation) {
  auto c = basic_config();
  c.headers["Authorization"] = "Bearer {key}";
  auto back = http_config_from_json(json(c));
  EXPECT_EQ(json(back), json(c));
  auto bad = json(c);
  bad["http_method"] = "PUT";
  EXPECT_THROW(http_config_from_json(bad), ConfigError);
  bad = json(c);
  bad.erase("response_path");
  EXPECT_THROW(http_config_from_json(bad), ConfigError);
  bad = json(c);
  bad["max_concurrency"] = 0;
  EXPECT_THROW(http_config_from_json(bad), ConfigError);
}

TEST(HttpConfig, CredentialsOnlyFromEnvironment) {
  auto j = json(basic_config());
  j["key"] = "secret";
  EXPECT_THROW(http_config_from_json(j), ConfigError);

  auto c = basic_config();
  c.key_env = "BIASRATE_TEST_KEY_UNSET_123";
  ::unsetenv(c.key_env.c_str());
  EXPECT_THROW(HttpTranslator("svc", c), ConfigError);
  ::setenv(c.key_env.c_str(), "s3cret value", 1);
  c.request_template = "q={text}&key={key}";
  HttpTranslator t("svc", c);
  EXPECT_NE(t.build_request("He", "en", "fr").body.find("key=s3cret%20value"), std::string::npos);
  ::unsetenv(c.key_env.c_str());
}

TEST(HttpHelpers, EscapingAndPaths) {
  EXPECT_EQ(url_encode("He is a Nurse."), "He%20is%20a%20Nurse.");
  EXPECT_EQ(url_encode("a&b=c/ü"), "a%26b%3Dc%2F%C3%BC");
  EXPECT_EQ(json_escape("say \"hi\"\n"), "say \\\"hi\\\"\\n");
  EXPECT_EQ(substitute("{a}-{b}-{c}", {{"a", "1"}, {"b", "2"}}, [](std::string_view s) { return std::string(s); }),
            "1-2-{c}");
  auto doc = json::parse(R"({"a": [{"b": "x"}, {"b": "y"}]})");
  EXPECT_EQ(follow_path(doc, "a.1.b"), "y");
  EXPECT_THROW(follow_path(doc, "a.2.b"), ExecutionError);
  EXPECT_THROW(follow_path(doc, "a.0.c"), ExecutionError);
  EXPECT_EQ(split_url("https://h:8080/p?q=1"), (std::pair<std::string, std::string>{"https://h:8080", "/p?q=1"}));
  EXPECT_THROW(split_url("h/p"), ConfigError);
}

TEST(HttpTranslator, BuildsJsonAndQueryRequests) {
  auto c = basic_config();
  HttpTranslator post("svc", c);
  auto r = post.build_request("She said \"hi\".", "en", "fr");
  EXPECT_EQ(r.method, "POST");
  EXPECT_EQ(r.content_type, "application/json");
  auto body = json::parse(r.body);
  EXPECT_EQ(body["q"], "She said \"hi\".");
  EXPECT_EQ(body["target"], "fr");

  c.http_method = "GET";
  c.request_template = "q={text}&langpair={source}|{target}";
  HttpTranslator get("svc", c);
  auto g = get.build_request("He is a Cook.", "en", "it");
  EXPECT_EQ(g.url, "http://translate.invalid/v1?q=He%20is%20a%20Cook.&langpair=en|it");
  EXPECT_TRUE(g.body.empty());
}

TEST(HttpTranslator, RetriesTransientFailuresWithBackoff) {
  int calls = 0;
  Recorder rec;
  HttpTranslator t(
      "svc", basic_config(), {},
      [&](const HttpRequest& req) -> HttpResponse {
        ++calls;
        if (calls == 1) return {0, {}, "connection refused"};
        if (calls == 2) return {429, "slow down", {}};
        if (calls == 3) return {503, "", {}};
        return {200, ok_body(json::parse(req.body)["q"].get<std::string>() + "!"), {}};
      },
      rec.sleeper());
  EXPECT_EQ(t.translate("He", "en", "fr"), "He!");
  EXPECT_EQ(calls, 4);
  EXPECT_EQ(rec.sleeps, (std::vector<std::chrono::milliseconds>{100ms, 200ms, 400ms}));
}

TEST(HttpTranslator, ExhaustionIsDistinct) {
  int calls = 0;
  Recorder rec;
  HttpTranslator t(
      "svc", basic_config(), {},
      [&](const HttpRequest&) -> HttpResponse {
        ++calls;
        return {500, "boom", {}};
      },
      rec.sleeper());
  EXPECT_THROW(t.translate("He", "en", "fr"), NetworkExhaustedError);
  EXPECT_EQ(calls, 4);
  EXPECT_EQ(rec.sleeps.size(), 3u);
}

TEST(HttpTranslator, ClientErrorsAreNotRetried) {
  int calls = 0;
  HttpTranslator t(
      "svc", basic_config(), {},
      [&](const HttpRequest&) -> HttpResponse {
        ++calls;
        return {403, "forbidden", {}};
      },
      [](std::chrono::milliseconds) {});
  try {
    t.translate("He", "en", "fr");
    FAIL();
  } catch (const NetworkExhaustedError&) {
    FAIL() << "403 must not count as exhaustion";
  } catch (const ExecutionError& e) {
    EXPECT_NE(std::string(e.what()).find("HTTP 403"), std::string::npos);
  }
  EXPECT_EQ(calls, 1);
}

TEST(HttpTranslator, MalformedResponses) {
  auto with_body = [](std::string body) {
    return HttpTranslator(
        "svc", basic_config(), {}, [body](const HttpRequest&) -> HttpResponse { return {200, body, {}}; },
        [](std::chrono::milliseconds) {});
  };
  EXPECT_THROW(with_body("not json").translate("He", "en", "fr"), ExecutionError);
  EXPECT_THROW(with_body(R"({"data": {}})").translate("He", "en", "fr"), ExecutionError);
  EXPECT_THROW(with_body(ok_body("")).translate("He", "en", "fr"), ExecutionError);
  EXPECT_EQ(with_body(ok_body("")).translate("", "en", "fr"), "");
}

TEST(HttpTranslator, LanguageSupport) {
  HttpTranslator t(
      "svc", basic_config(), {"en", "fr"}, [](const HttpRequest&) -> HttpResponse { return {200, ok_body("x"), {}}; },
      [](std::chrono::milliseconds) {});
  EXPECT_TRUE(t.supports("en", "fr"));
  EXPECT_FALSE(t.supports("en", "hi"));
  EXPECT_THROW(t.translate("He", "en", "hi"), ExecutionError);
}

TEST(RequestGate, CapsConcurrency) {
  auto c = basic_config();
  c.max_concurrency = 2;
  std::atomic<int> in_flight{0}, peak{0};
  HttpTranslator t(
      "svc", c, {},
      [&](const HttpRequest&) -> HttpResponse {
        int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(15ms);
        --in_flight;
        return {200, ok_body("ok"), {}};
      },
      [](std::chrono::milliseconds) {});
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { t.translate("He", "en", "fr"); });
  for (auto& th : threads) th.join();
  EXPECT_EQ(peak.load(), 2);
}

TEST(RequestGate, SpacesRequestStarts) {
  RequestGate gate(4, 20ms);
  std::vector<RequestGate::Clock::time_point> starts;
  for (int i = 0; i < 4; ++i) {
    auto ticket = gate.acquire();
    starts.push_back(RequestGate::Clock::now());
  }
  for (std::size_t i = 1; i < starts.size(); ++i) EXPECT_GE(starts[i] - starts[i - 1], 19ms);
}

TEST(Factory, BuildsServicesFromConfig) {
  auto mock = translator_from_json(json::parse(R"({"type": "mock", "mock": {"behavior": "flip"}})"));
  EXPECT_EQ(mock->id(), "mock-flip");
  auto http = translator_from_json(json{{"type", "http"}, {"id", "remote"}, {"http", basic_config()}},
                                   [](const HttpRequest&) -> HttpResponse { return {200, ok_body("x"), {}}; });
  EXPECT_EQ(http->id(), "remote");
  EXPECT_THROW(translator_from_json(json{{"type", "ftp"}}), ConfigError);
  EXPECT_THROW(translator_from_argument("mock:shuffle"), ConfigError);
  EXPECT_THROW(translator_from_argument("/nonexistent/service.json"), ConfigError);
}

// End to end through a real socket on the loopback interface.
TEST(HttpTranslator, TalksToLocalServer) {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/translate", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    if (hits == 1) {
      res.status = 503;
      return;
    }
    auto body = json::parse(req.body);
    res.set_content(ok_body("[" + body["target"].get<std::string>() + "] " + body["q"].get<std::string>()),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto c = basic_config();
  c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/translate";
  c.backoff_initial_ms = 1;
  c.timeout_ms = 5000;
  HttpTranslator t("local", c);
  EXPECT_EQ(t.translate("He is a Cook.", "en", "fr"), "[fr] He is a Cook.");
  EXPECT_EQ(hits.load(), 2);

  server.stop();
  worker.join();
  c.max_retries = 1;
  HttpTranslator down("local", c);
  EXPECT_THROW(down.translate("He", "en", "fr"), NetworkExhaustedError);
}

}  // namespace
}  // namespace biasrate
