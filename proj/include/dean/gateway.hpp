#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dean {

enum class Provider { HttpChatCompletions, Replay, ScriptedMock };

const char* provider_name(Provider p);
Provider provider_from_string(const std::string& s);

struct ModelConfig {
  Provider provider = Provider::ScriptedMock;
  std::string model_id;
  double temperature = 0.0;
  bool reasoning_model = false;
  std::optional<std::string> reasoning_effort;  // only for reasoning models
  int max_output_tokens = 4096;
  std::optional<std::string> endpoint_url;  // base URL; default api.openai.com
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_initial{1000};
  double backoff_factor = 2.0;
  std::chrono::milliseconds backoff_cap{60000};

  void validate() const;
  std::string to_json_string() const;
  static ModelConfig from_json_string(const std::string& text);
};

struct TokenUsage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

struct CompletionOutcome {
  std::string text;
  std::string model_id;
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
  std::optional<TokenUsage> usage;
};

/// Per-item result of complete_batch; errors are positional, never abort the
/// batch.
struct CompletionResult {
  std::optional<CompletionOutcome> outcome;
  std::string error_category;
  std::string error_message;

  bool ok() const { return outcome.has_value(); }
};

/// Deterministic test backend: a queue of scripted actions per model id,
/// with in-flight instrumentation for concurrency assertions.
class ScriptedModel {
 public:
  void enqueue_response(std::string text, int latency_ms = 0);
  void enqueue_transient_failure(std::string message);
  void enqueue_fatal_failure(std::string message);
  /// Fallback when the queue is empty: response as a function of the prompt,
  /// with an optional per-prompt latency.
  void set_responder(std::function<std::string(const std::string&)> fn,
                     std::function<int(const std::string&)> latency_ms_fn = {});

  int total_calls() const;
  int max_in_flight_seen() const;

 private:
  friend class Gateway;
  struct Action {
    enum class Kind { Respond, FailTransient, FailFatal } kind = Kind::Respond;
    std::string text;
    int latency_ms = 0;
  };
  mutable std::mutex mutex_;
  std::vector<Action> queue_;
  std::size_t next_ = 0;
  std::function<std::string(const std::string&)> responder_;
  std::function<int(const std::string&)> latency_fn_;
  int total_calls_ = 0;
  int in_flight_ = 0;
  int max_in_flight_ = 0;
};

/// File-backed (prompt-hash -> response) store enabling offline, bit-stable
/// re-execution of model calls. Layout: <root>/<model_id>/<hash>.
class CassetteStore {
 public:
  CassetteStore() = default;
  explicit CassetteStore(std::filesystem::path root) : root_(std::move(root)) {}

  static std::string key(const std::string& model_id, const std::string& prompt);

  std::optional<std::string> lookup(const std::string& model_id,
                                    const std::string& prompt) const;
  void store(const std::string& model_id, const std::string& prompt,
             const std::string& response) const;

  bool configured() const { return !root_.empty(); }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

/// Uniform chat-completion interface over the live HTTP backend, the replay
/// cassette backend, and the scripted mock. Shareable across threads.
class Gateway {
 public:
  Gateway() = default;
  explicit Gateway(CassetteStore cassettes, bool record = false)
      : cassettes_(std::move(cassettes)), record_(record) {}

  /// Completes one prompt, retrying transient failures (timeouts, rate
  /// limits, 5xx) with exponential backoff and full jitter. Throws Error
  /// with category ExhaustedRetries / MissingCassette / AuthMissing.
  CompletionOutcome complete(const std::string& prompt, const ModelConfig& config);

  /// Completes prompts with at most max_in_flight outstanding requests.
  /// Results are positionally aligned with the inputs regardless of
  /// completion order.
  std::vector<CompletionResult> complete_batch(const std::vector<std::string>& prompts,
                                               const ModelConfig& config,
                                               int max_in_flight);

  /// Scripted backend registry, keyed by model id. Creates on first use.
  ScriptedModel& script(const std::string& model_id);

  const CassetteStore& cassettes() const { return cassettes_; }
  void set_record(bool record) { record_ = record; }

 private:
  CompletionOutcome dispatch(const std::string& prompt, const ModelConfig& config);
  CompletionOutcome scripted_complete(const std::string& prompt, const ModelConfig& config);
  CompletionOutcome replay_complete(const std::string& prompt, const ModelConfig& config);
  CompletionOutcome http_complete(const std::string& prompt, const ModelConfig& config);

  CassetteStore cassettes_;
  bool record_ = false;
  std::mutex scripts_mutex_;
  std::map<std::string, std::unique_ptr<ScriptedModel>> scripts_;
};

}  // namespace dean
