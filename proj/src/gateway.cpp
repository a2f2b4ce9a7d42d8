#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "dean/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "dean/error.hpp"

namespace dean {

namespace {

// Retryable failure inside one complete() loop; never escapes the gateway.
struct TransientFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FatalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sanitize_for_path(const std::string& s) {
  std::string out;
  for (char c : s)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                          c == '_' || c == '-'
                      ? c
                      : '_');
  return out;
}

std::chrono::milliseconds jittered_backoff(const ModelConfig& cfg, int attempt) {
  double base = static_cast<double>(cfg.backoff_initial.count()) *
                std::pow(cfg.backoff_factor, attempt - 1);
  base = std::min(base, static_cast<double>(cfg.backoff_cap.count()));
  thread_local std::mt19937_64 rng{std::random_device{}()};
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::chrono::milliseconds(static_cast<long long>(base * u));
}

}  // namespace

const char* provider_name(Provider p) {
  switch (p) {
    case Provider::HttpChatCompletions: return "http";
    case Provider::Replay: return "replay";
    case Provider::ScriptedMock: return "scripted";
  }
  return "scripted";
}

Provider provider_from_string(const std::string& s) {
  if (s == "http" || s == "http_chat_completions") return Provider::HttpChatCompletions;
  if (s == "replay") return Provider::Replay;
  if (s == "scripted" || s == "scripted_mock") return Provider::ScriptedMock;
  throw Error(Errc::MalformedConfig, "unknown provider '" + s + "'");
}

void ModelConfig::validate() const {
  if (model_id.empty()) throw Error(Errc::MalformedConfig, "model config: empty model_id");
  if (temperature < 0.0)
    throw Error(Errc::MalformedConfig, "model config: negative temperature");
  if (max_output_tokens <= 0)
    throw Error(Errc::MalformedConfig, "model config: max_output_tokens must be positive");
  if (max_retries < 0)
    throw Error(Errc::MalformedConfig, "model config: negative max_retries");
  if (reasoning_effort) {
    if (!reasoning_model)
      throw Error(Errc::MalformedConfig,
                  "model config: reasoning_effort set for non-reasoning model '" +
                      model_id + "'");
    if (*reasoning_effort != "low" && *reasoning_effort != "medium" &&
        *reasoning_effort != "high")
      throw Error(Errc::MalformedConfig,
                  "model config: reasoning_effort must be low|medium|high");
  }
}

std::string ModelConfig::to_json_string() const {
  nlohmann::json j;
  j["provider"] = provider_name(provider);
  j["model_id"] = model_id;
  j["temperature"] = temperature;
  j["reasoning_model"] = reasoning_model;
  if (reasoning_effort) j["reasoning_effort"] = *reasoning_effort;
  j["max_output_tokens"] = max_output_tokens;
  if (endpoint_url) j["endpoint_url"] = *endpoint_url;
  j["api_key_env"] = api_key_env;
  j["timeout_ms"] = timeout.count();
  j["max_retries"] = max_retries;
  j["backoff_initial_ms"] = backoff_initial.count();
  j["backoff_factor"] = backoff_factor;
  j["backoff_cap_ms"] = backoff_cap.count();
  return j.dump();
}

ModelConfig ModelConfig::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedConfig, std::string("model config: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.provider = provider_from_string(j.value("provider", "scripted"));
    cfg.model_id = j.at("model_id").get<std::string>();
    cfg.temperature = j.value("temperature", 0.0);
    cfg.reasoning_model = j.value("reasoning_model", false);
    if (j.contains("reasoning_effort"))
      cfg.reasoning_effort = j["reasoning_effort"].get<std::string>();
    cfg.max_output_tokens = j.value("max_output_tokens", 4096);
    if (j.contains("endpoint_url"))
      cfg.endpoint_url = j["endpoint_url"].get<std::string>();
    cfg.api_key_env = j.value("api_key_env", std::string("OPENAI_API_KEY"));
    cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    cfg.max_retries = j.value("max_retries", 3);
    cfg.backoff_initial = std::chrono::milliseconds(j.value("backoff_initial_ms", 1000));
    cfg.backoff_factor = j.value("backoff_factor", 2.0);
    cfg.backoff_cap = std::chrono::milliseconds(j.value("backoff_cap_ms", 60000));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedConfig, std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void ScriptedModel::enqueue_response(std::string text, int latency_ms) {
  std::lock_guard lock(mutex_);
  queue_.push_back({Action::Kind::Respond, std::move(text), latency_ms});
}

void ScriptedModel::enqueue_transient_failure(std::string message) {
  std::lock_guard lock(mutex_);
  queue_.push_back({Action::Kind::FailTransient, std::move(message), 0});
}

void ScriptedModel::enqueue_fatal_failure(std::string message) {
  std::lock_guard lock(mutex_);
  queue_.push_back({Action::Kind::FailFatal, std::move(message), 0});
}

void ScriptedModel::set_responder(std::function<std::string(const std::string&)> fn,
                                  std::function<int(const std::string&)> latency_ms_fn) {
  std::lock_guard lock(mutex_);
  responder_ = std::move(fn);
  latency_fn_ = std::move(latency_ms_fn);
}

int ScriptedModel::total_calls() const {
  std::lock_guard lock(mutex_);
  return total_calls_;
}

int ScriptedModel::max_in_flight_seen() const {
  std::lock_guard lock(mutex_);
  return max_in_flight_;
}

std::string CassetteStore::key(const std::string& model_id, const std::string& prompt) {
  // FNV-1a 64-bit over model id and prompt; stable across platforms.
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  mix(model_id);
  h ^= '\n';
  h *= 1099511628211ull;
  mix(prompt);
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::optional<std::string> CassetteStore::lookup(const std::string& model_id,
                                                 const std::string& prompt) const {
  if (!configured()) return std::nullopt;
  auto path = root_ / sanitize_for_path(model_id) / key(model_id, prompt);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void CassetteStore::store(const std::string& model_id, const std::string& prompt,
                          const std::string& response) const {
  if (!configured()) throw Error(Errc::IoError, "cassette store has no root directory");
  auto dir = root_ / sanitize_for_path(model_id);
  std::filesystem::create_directories(dir);
  auto path = dir / key(model_id, prompt);
  if (std::filesystem::exists(path)) return;  // append-only
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write cassette " + path.string());
  out << response;
}

ScriptedModel& Gateway::script(const std::string& model_id) {
  std::lock_guard lock(scripts_mutex_);
  auto& slot = scripts_[model_id];
  if (!slot) slot = std::make_unique<ScriptedModel>();
  return *slot;
}

CompletionOutcome Gateway::scripted_complete(const std::string& prompt,
                                             const ModelConfig& config) {
  ScriptedModel& model = script(config.model_id);
  ScriptedModel::Action action;
  {
    std::lock_guard lock(model.mutex_);
    ++model.total_calls_;
    ++model.in_flight_;
    model.max_in_flight_ = std::max(model.max_in_flight_, model.in_flight_);
    if (model.next_ < model.queue_.size()) {
      action = model.queue_[model.next_++];
    } else if (model.responder_) {
      action = {ScriptedModel::Action::Kind::Respond, model.responder_(prompt),
                model.latency_fn_ ? model.latency_fn_(prompt) : 0};
    } else {
      --model.in_flight_;
      throw FatalFailure("scripted model '" + config.model_id +
                         "' has no remaining scripted actions");
    }
  }
  if (action.latency_ms > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(action.latency_ms));
  {
    std::lock_guard lock(model.mutex_);
    --model.in_flight_;
  }
  switch (action.kind) {
    case ScriptedModel::Action::Kind::FailTransient:
      throw TransientFailure(action.text);
    case ScriptedModel::Action::Kind::FailFatal:
      throw FatalFailure(action.text);
    case ScriptedModel::Action::Kind::Respond:
      break;
  }
  CompletionOutcome outcome;
  outcome.text = std::move(action.text);
  outcome.model_id = config.model_id;
  return outcome;
}

CompletionOutcome Gateway::replay_complete(const std::string& prompt,
                                           const ModelConfig& config) {
  if (!cassettes_.configured())
    throw Error(Errc::MissingCassette, "replay provider without a cassette directory");
  auto hit = cassettes_.lookup(config.model_id, prompt);
  if (!hit)
    throw Error(Errc::MissingCassette,
                "no cassette for model '" + config.model_id + "' key " +
                    CassetteStore::key(config.model_id, prompt));
  CompletionOutcome outcome;
  outcome.text = std::move(*hit);
  outcome.model_id = config.model_id;
  return outcome;
}

CompletionOutcome Gateway::http_complete(const std::string& prompt,
                                         const ModelConfig& config) {
  const char* key = std::getenv(config.api_key_env.c_str());
  if (!key || !*key)
    throw Error(Errc::AuthMissing,
                "environment variable " + config.api_key_env + " is not set");

  const std::string base = config.endpoint_url.value_or("https://api.openai.com");
  httplib::Client client(base);
  client.set_connection_timeout(config.timeout);
  client.set_read_timeout(config.timeout);
  client.set_bearer_token_auth(key);

  nlohmann::json body;
  body["model"] = config.model_id;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_output_tokens;
  if (config.reasoning_effort) body["reasoning_effort"] = *config.reasoning_effort;

  auto res = client.Post("/v1/chat/completions", body.dump(), "application/json");
  if (!res) throw TransientFailure("connection failure: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientFailure("HTTP " + std::to_string(res->status) + ": " + res->body);
  if (res->status == 401 || res->status == 403)
    throw Error(Errc::AuthMissing, "HTTP " + std::to_string(res->status) + ": " + res->body);
  if (res->status != 200)
    throw FatalFailure("HTTP " + std::to_string(res->status) + ": " + res->body);

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransientFailure(std::string("malformed response body: ") + e.what());
  }
  CompletionOutcome outcome;
  try {
    outcome.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransientFailure(std::string("unexpected response shape: ") + e.what());
  }
  outcome.model_id = config.model_id;
  if (j.contains("usage")) {
    TokenUsage usage;
    usage.input_tokens = j["usage"].value("prompt_tokens", 0);
    usage.output_tokens = j["usage"].value("completion_tokens", 0);
    outcome.usage = usage;
  }
  return outcome;
}

CompletionOutcome Gateway::dispatch(const std::string& prompt, const ModelConfig& config) {
  switch (config.provider) {
    case Provider::ScriptedMock: return scripted_complete(prompt, config);
    case Provider::Replay: return replay_complete(prompt, config);
    case Provider::HttpChatCompletions: return http_complete(prompt, config);
  }
  throw Error(Errc::MalformedConfig, "unknown provider");
}

CompletionOutcome Gateway::complete(const std::string& prompt, const ModelConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  int attempt = 0;
  std::string last_cause;
  while (true) {
    ++attempt;
    try {
      CompletionOutcome outcome = dispatch(prompt, config);
      outcome.attempt_count = attempt;
      outcome.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      if (record_ && config.provider != Provider::Replay && cassettes_.configured())
        cassettes_.store(config.model_id, prompt, outcome.text);
      return outcome;
    } catch (const TransientFailure& e) {
      last_cause = e.what();
      if (attempt > config.max_retries)
        throw Error(Errc::ExhaustedRetries,
                    "model '" + config.model_id + "' failed after " +
                        std::to_string(attempt) + " attempts; last cause: " + last_cause);
      auto delay = jittered_backoff(config, attempt);
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    } catch (const FatalFailure& e) {
      throw Error(Errc::ExhaustedRetries,
                  "model '" + config.model_id +
                      "' failed with non-retryable error: " + std::string(e.what()));
    }
  }
}

std::vector<CompletionResult> Gateway::complete_batch(
    const std::vector<std::string>& prompts, const ModelConfig& config,
    int max_in_flight) {
  if (max_in_flight < 1)
    throw Error(Errc::MalformedConfig, "max_in_flight must be >= 1");
  std::vector<CompletionResult> results(prompts.size());
  if (prompts.empty()) return results;

  // Worker-pool of at most max_in_flight threads pulling an atomic index;
  // results land by position so output order never depends on completion
  // order.
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= prompts.size()) return;
      try {
        results[i].outcome = complete(prompts[i], config);
      } catch (const Error& e) {
        results[i].error_category = e.category_name();
        results[i].error_message = e.what();
      } catch (const std::exception& e) {
        results[i].error_category = "Unknown";
        results[i].error_message = e.what();
      }
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), prompts.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace dean
