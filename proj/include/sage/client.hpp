#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "sage/prompts.hpp"

namespace sage {

enum class Backend { live, mock };
enum class ReasoningEffort { low, medium, high };

std::string to_string(Backend b);
std::string to_string(ReasoningEffort e);
Backend parse_backend(std::string_view text);
ReasoningEffort parse_reasoning_effort(std::string_view text);

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_base_seconds = 1.0;
};

struct ProviderConfig {
  Backend backend = Backend::mock;
  std::string model_name = "gpt-5-mini";
  ReasoningEffort reasoning_effort = ReasoningEffort::medium;
  long max_output_tokens = 128000;
  std::string base_url;               // live only, e.g. https://api.openai.com
  std::string endpoint_path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  double request_timeout_seconds = 120.0;
  RetryPolicy retry;
  int requests_per_minute = 60;
  std::uint64_t mock_seed = 0;  // mock backend only

  /// Throws config_invalid on contradictions (live without base_url, ...).
  void validate() const;
  /// Snapshot for records and transcripts. Never includes the key itself.
  nlohmann::ordered_json to_json() const;
  static ProviderConfig from_json(const nlohmann::json& doc);
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct Completion {
  std::string raw_text;
  std::optional<TokenUsage> token_usage;
  double latency_seconds = 0.0;
  int attempt_count = 1;
};

class Client {
 public:
  virtual ~Client() = default;
  virtual Completion complete(const PromptBundle& bundle) = 0;
  /// Total completion requests issued so far (resume accounting).
  virtual std::uint64_t completions_issued() const = 0;
};

/// Token bucket; acquire() blocks until a slot is free.
class RateLimiter {
 public:
  explicit RateLimiter(int requests_per_minute);
  void acquire();

 private:
  double per_second_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;
  std::mutex mutex_;
};

/// HTTP chat-completions transport with retry/backoff and rate limiting.
class LiveClient : public Client {
 public:
  explicit LiveClient(ProviderConfig config);
  Completion complete(const PromptBundle& bundle) override;
  std::uint64_t completions_issued() const override { return issued_.load(); }

 private:
  ProviderConfig config_;
  std::string api_key_;
  RateLimiter limiter_;
  std::atomic<std::uint64_t> issued_{0};
};

/// Chooses the backend from config; mock backends are wired to the given
/// ontology's dimension registry.
std::unique_ptr<Client> make_client(const ProviderConfig& config, const Ontology& ontology);

/// Locates the first well-formed JSON document in a completion, tolerating
/// code fences and leading/trailing prose. Throws not_structured.
nlohmann::json extract_structured(const std::string& raw_text);

}  // namespace sage
