#include "doctest.h"

#include <algorithm>

#include "dean/error.hpp"
#include "dean/gateway.hpp"
#include "dean/rng.hpp"
#include "test_support.hpp"

using namespace dean;

namespace {

ModelConfig scripted_config(const std::string& id) {
  ModelConfig cfg;
  cfg.provider = Provider::ScriptedMock;
  cfg.model_id = id;
  cfg.backoff_initial = std::chrono::milliseconds(0);  // keep tests instant
  return cfg;
}

}  // namespace

TEST_CASE("scripted completion returns on the first attempt") {
  Gateway gateway;
  gateway.script("m").enqueue_response("ok");
  const auto outcome = gateway.complete("prompt", scripted_config("m"));
  CHECK(outcome.text == "ok");
  CHECK(outcome.attempt_count == 1);
  CHECK(outcome.model_id == "m");
}

TEST_CASE("transient failures are retried with attempt accounting") {
  Gateway gateway;
  auto& script = gateway.script("m");
  script.enqueue_transient_failure("429 slow down");
  script.enqueue_transient_failure("timeout");
  script.enqueue_response("finally");

  ModelConfig cfg = scripted_config("m");
  cfg.max_retries = 3;
  const auto outcome = gateway.complete("p", cfg);
  CHECK(outcome.text == "finally");
  CHECK(outcome.attempt_count == 3);
  CHECK(outcome.attempt_count <= cfg.max_retries + 1);
}

TEST_CASE("retries exhaust into ExhaustedRetries with the last cause") {
  Gateway gateway;
  auto& script = gateway.script("m");
  for (int i = 0; i < 4; ++i) script.enqueue_transient_failure("cause-" + std::to_string(i));

  ModelConfig cfg = scripted_config("m");
  cfg.max_retries = 2;
  try {
    gateway.complete("p", cfg);
    FAIL("expected ExhaustedRetries");
  } catch (const Error& e) {
    CHECK(e.category() == Errc::ExhaustedRetries);
    CHECK(std::string(e.what()).find("cause-2") != std::string::npos);
  }
  CHECK(script.total_calls() == 3);  // max_retries + 1
}

TEST_CASE("fatal failures do not burn retries") {
  Gateway gateway;
  gateway.script("m").enqueue_fatal_failure("bad request");
  ModelConfig cfg = scripted_config("m");
  cfg.max_retries = 5;
  CHECK_THROWS_AS(gateway.complete("p", cfg), Error);
  CHECK(gateway.script("m").total_calls() == 1);
}

TEST_CASE("replay cassettes hit and miss") {
  test::TempDir tmp;
  CassetteStore store(tmp.path());
  store.store("model-a", "prompt one", "response one");

  Gateway gateway(store);
  ModelConfig cfg = scripted_config("model-a");
  cfg.provider = Provider::Replay;

  CHECK(gateway.complete("prompt one", cfg).text == "response one");
  try {
    gateway.complete("a different prompt", cfg);
    FAIL("expected MissingCassette");
  } catch (const Error& e) {
    CHECK(e.category() == Errc::MissingCassette);
  }
}

TEST_CASE("cassette keys separate models and prompts") {
  CHECK(CassetteStore::key("m", "p") == CassetteStore::key("m", "p"));
  CHECK(CassetteStore::key("m", "p") != CassetteStore::key("m", "q"));
  CHECK(CassetteStore::key("m", "p") != CassetteStore::key("n", "p"));
  // Layout: <root>/<model>/<hash>, 16 hex chars.
  CHECK(CassetteStore::key("m", "p").size() == 16);
}

TEST_CASE("record mode writes cassettes that replay bit-identically") {
  test::TempDir tmp;
  Gateway recorder(CassetteStore(tmp.path()), /*record=*/true);
  recorder.script("m").enqueue_response("recorded answer");
  recorder.complete("the prompt", scripted_config("m"));

  Gateway replayer{CassetteStore(tmp.path())};
  ModelConfig cfg = scripted_config("m");
  cfg.provider = Provider::Replay;
  CHECK(replayer.complete("the prompt", cfg).text == "recorded answer");
  CHECK(replayer.complete("the prompt", cfg).text == "recorded answer");
}

TEST_CASE("auth is required for the http provider") {
  Gateway gateway;
  ModelConfig cfg;
  cfg.provider = Provider::HttpChatCompletions;
  cfg.model_id = "gpt-x";
  cfg.api_key_env = "DEAN_TEST_SURELY_UNSET_KEY";
  try {
    gateway.complete("p", cfg);
    FAIL("expected AuthMissing");
  } catch (const Error& e) {
    CHECK(e.category() == Errc::AuthMissing);
  }
}

TEST_CASE("batch results stay in input order under shuffled latencies") {
  Gateway gateway;
  // Latency shuffled per prompt: later prompts finish first, yet results
  // must land positionally.
  std::vector<int> latencies{40, 5, 30, 0, 25, 10, 35, 1, 20, 15};
  gateway.script("m").set_responder(
      [](const std::string& prompt) { return "echo:" + prompt; },
      [latencies](const std::string& prompt) {
        return latencies[static_cast<std::size_t>(prompt.back() - '0')];
      });

  std::vector<std::string> prompts;
  for (int i = 0; i < 10; ++i) prompts.push_back("p" + std::to_string(i));
  const auto results = gateway.complete_batch(prompts, scripted_config("m"), 3);

  REQUIRE(results.size() == prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    REQUIRE(results[i].ok());
    CHECK(results[i].outcome->text == "echo:" + prompts[i]);
  }
}

TEST_CASE("empty batch yields an empty list") {
  Gateway gateway;
  CHECK(gateway.complete_batch({}, scripted_config("m"), 3).empty());
}

TEST_CASE("a failing item does not poison the batch") {
  Gateway gateway;
  gateway.script("m").set_responder([](const std::string& prompt) {
    if (prompt == "bad") throw std::runtime_error("unreachable");
    return "ok:" + prompt;
  });
  // Force the failure deterministically through a dedicated model.
  Gateway g2;
  auto& script = g2.script("mix");
  ModelConfig cfg = scripted_config("mix");
  cfg.max_retries = 0;

  std::vector<std::string> prompts;
  for (int i = 0; i < 10; ++i) prompts.push_back("p" + std::to_string(i));
  // Serve strictly sequentially so the failure lands on one known position.
  for (int i = 0; i < 10; ++i) {
    if (i == 4)
      script.enqueue_transient_failure("boom");
    else
      script.enqueue_response("ok" + std::to_string(i));
  }
  const auto results = g2.complete_batch(prompts, cfg, 1);
  int failures = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok()) {
      ++failures;
      CHECK(i == 4);
      CHECK(results[i].error_category == "ExhaustedRetries");
    }
  }
  CHECK(failures == 1);
}

TEST_CASE("bounded concurrency is observed by the instrumented mock") {
  const int n = 24;
  std::vector<std::string> prompts(n, "p");
  for (int bound : {1, 3, 8}) {
    Gateway g;
    auto& s = g.script("m");
    for (int i = 0; i < n; ++i) s.enqueue_response("r", 5);
    const auto results = g.complete_batch(prompts, scripted_config("m"), bound);
    for (const auto& r : results) CHECK(r.ok());
    CHECK(s.max_in_flight_seen() <= bound);
    CHECK(s.total_calls() == n);
  }
}

TEST_CASE("model config json round-trip and validation") {
  ModelConfig cfg;
  cfg.provider = Provider::Replay;
  cfg.model_id = "gpt-4.1";
  cfg.reasoning_model = true;
  cfg.reasoning_effort = "high";
  cfg.max_output_tokens = 1234;
  cfg.timeout = std::chrono::milliseconds(2500);

  const ModelConfig parsed = ModelConfig::from_json_string(cfg.to_json_string());
  CHECK(parsed.provider == Provider::Replay);
  CHECK(parsed.model_id == "gpt-4.1");
  CHECK(parsed.reasoning_effort == std::optional<std::string>("high"));
  CHECK(parsed.max_output_tokens == 1234);
  CHECK(parsed.timeout.count() == 2500);

  SUBCASE("reasoning effort needs a reasoning model") {
    ModelConfig bad = cfg;
    bad.reasoning_model = false;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
  SUBCASE("temperature must be non-negative") {
    ModelConfig bad = cfg;
    bad.temperature = -0.5;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}
