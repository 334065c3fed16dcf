#include "sage/client.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "sage/mock_client.hpp"

namespace sage {

std::string to_string(Backend b) { return b == Backend::live ? "live" : "mock"; }

std::string to_string(ReasoningEffort e) {
  switch (e) {
    case ReasoningEffort::low: return "low";
    case ReasoningEffort::medium: return "medium";
    case ReasoningEffort::high: return "high";
  }
  return "?";
}

Backend parse_backend(std::string_view text) {
  if (text == "live") return Backend::live;
  if (text == "mock") return Backend::mock;
  raise(Errc::usage, "unknown backend '" + std::string(text) + "' (use mock or live)");
}

ReasoningEffort parse_reasoning_effort(std::string_view text) {
  if (text == "low") return ReasoningEffort::low;
  if (text == "medium") return ReasoningEffort::medium;
  if (text == "high") return ReasoningEffort::high;
  raise(Errc::config_invalid, "unknown reasoning effort '" + std::string(text) + "'");
}

void ProviderConfig::validate() const {
  if (max_output_tokens <= 0) raise(Errc::config_invalid, "max_output_tokens must be > 0");
  if (retry.max_attempts < 1) raise(Errc::config_invalid, "retry.max_attempts must be >= 1");
  if (retry.backoff_base_seconds < 0.0)
    raise(Errc::config_invalid, "retry.backoff_base_seconds must be >= 0");
  if (requests_per_minute < 1) raise(Errc::config_invalid, "requests_per_minute must be >= 1");
  if (backend == Backend::live) {
    if (base_url.empty()) raise(Errc::config_invalid, "live backend requires base_url");
    if (api_key_env.empty()) raise(Errc::config_invalid, "live backend requires api_key_env");
  }
}

nlohmann::ordered_json ProviderConfig::to_json() const {
  nlohmann::ordered_json doc;
  doc["backend"] = to_string(backend);
  doc["model_name"] = model_name;
  doc["reasoning_effort"] = to_string(reasoning_effort);
  doc["max_output_tokens"] = max_output_tokens;
  if (backend == Backend::live) {
    doc["base_url"] = base_url;
    doc["endpoint_path"] = endpoint_path;
    doc["api_key_env"] = api_key_env;  // the variable name, never the key
  }
  doc["request_timeout_seconds"] = request_timeout_seconds;
  doc["retry"] = {{"max_attempts", retry.max_attempts},
                  {"backoff_base_seconds", retry.backoff_base_seconds}};
  doc["requests_per_minute"] = requests_per_minute;
  if (backend == Backend::mock) doc["mock_seed"] = mock_seed;
  return doc;
}

ProviderConfig ProviderConfig::from_json(const nlohmann::json& doc) {
  ProviderConfig config;
  try {
    if (doc.contains("backend")) config.backend = parse_backend(doc["backend"].get<std::string>());
    if (doc.contains("model_name")) config.model_name = doc["model_name"].get<std::string>();
    if (doc.contains("reasoning_effort"))
      config.reasoning_effort = parse_reasoning_effort(doc["reasoning_effort"].get<std::string>());
    if (doc.contains("max_output_tokens"))
      config.max_output_tokens = doc["max_output_tokens"].get<long>();
    if (doc.contains("base_url")) config.base_url = doc["base_url"].get<std::string>();
    if (doc.contains("endpoint_path"))
      config.endpoint_path = doc["endpoint_path"].get<std::string>();
    if (doc.contains("api_key_env")) config.api_key_env = doc["api_key_env"].get<std::string>();
    if (doc.contains("request_timeout_seconds"))
      config.request_timeout_seconds = doc["request_timeout_seconds"].get<double>();
    if (doc.contains("retry")) {
      const auto& retry = doc["retry"];
      if (retry.contains("max_attempts"))
        config.retry.max_attempts = retry["max_attempts"].get<int>();
      if (retry.contains("backoff_base_seconds"))
        config.retry.backoff_base_seconds = retry["backoff_base_seconds"].get<double>();
    }
    if (doc.contains("requests_per_minute"))
      config.requests_per_minute = doc["requests_per_minute"].get<int>();
    if (doc.contains("mock_seed")) config.mock_seed = doc["mock_seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::config_invalid, std::string("provider config: ") + e.what());
  }
  return config;
}

RateLimiter::RateLimiter(int requests_per_minute)
    : per_second_(requests_per_minute / 60.0),
      tokens_(static_cast<double>(requests_per_minute) / 60.0 + 1.0),
      last_refill_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_refill_).count();
    last_refill_ = now;
    tokens_ = std::min(tokens_ + elapsed * per_second_, per_second_ * 60.0);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait = (1.0 - tokens_) / per_second_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    lock.lock();
  }
}

LiveClient::LiveClient(ProviderConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_minute) {
  config_.validate();
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    raise(Errc::auth, "environment variable " + config_.api_key_env + " is not set");
  api_key_ = key;
}

Completion LiveClient::complete(const PromptBundle& bundle) {
  nlohmann::ordered_json body;
  body["model"] = config_.model_name;
  body["messages"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"role", "system"}, {"content", bundle.system_text}},
       nlohmann::ordered_json{{"role", "user"}, {"content", bundle.user_text}}});
  body["response_format"] = {{"type", "json_object"}};
  body["max_completion_tokens"] = config_.max_output_tokens;
  body["reasoning_effort"] = to_string(config_.reasoning_effort);
  const std::string payload = body.dump();

  httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
  const auto start = std::chrono::steady_clock::now();
  std::string last_error = "no attempt made";

  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double delay =
          config_.retry.backoff_base_seconds * std::pow(2.0, attempt - 2);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    limiter_.acquire();
    issued_.fetch_add(1);

    httplib::Client http(config_.base_url);
    http.set_connection_timeout(std::chrono::duration<double>(config_.request_timeout_seconds));
    http.set_read_timeout(std::chrono::duration<double>(config_.request_timeout_seconds));
    http.set_write_timeout(std::chrono::duration<double>(config_.request_timeout_seconds));

    auto result = http.Post(config_.endpoint_path, headers, payload, "application/json");
    if (!result) {
      if (result.error() == httplib::Error::ConnectionTimeout ||
          result.error() == httplib::Error::Read || result.error() == httplib::Error::Write) {
        last_error = "transport: " + httplib::to_string(result.error());
        continue;  // retriable
      }
      last_error = "connection failed: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 401 || result->status == 403)
      raise(Errc::auth, "provider rejected credentials (HTTP " +
                            std::to_string(result->status) + ")");
    if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;  // retriable
    }
    if (result->status != 200) {
      raise(Errc::transport, "HTTP " + std::to_string(result->status) + ": " + result->body);
    }

    Completion completion;
    completion.attempt_count = attempt;
    completion.latency_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
      const auto doc = nlohmann::json::parse(result->body);
      completion.raw_text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      if (doc.contains("usage")) {
        TokenUsage usage;
        usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
        usage.completion_tokens = doc["usage"].value("completion_tokens", 0L);
        completion.token_usage = usage;
      }
    } catch (const nlohmann::json::exception& e) {
      raise(Errc::transport, std::string("malformed provider response: ") + e.what());
    }
    return completion;
  }
  raise(Errc::transport, "all " + std::to_string(config_.retry.max_attempts) +
                             " attempts failed; last error: " + last_error);
}

std::unique_ptr<Client> make_client(const ProviderConfig& config, const Ontology& ontology) {
  config.validate();
  if (config.backend == Backend::mock)
    return std::make_unique<MockClient>(config.mock_seed, ontology);
  return std::make_unique<LiveClient>(config);
}

namespace {

/// Finds the end of the JSON document starting at `start` by bracket
/// balancing, string- and escape-aware. Returns npos when unbalanced.
size_t find_document_end(const std::string& text, size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      --depth;
      if (depth == 0) return i;
      if (depth < 0) return std::string::npos;
    }
  }
  return std::string::npos;
}

}  // namespace

nlohmann::json extract_structured(const std::string& raw_text) {
  for (size_t pos = 0; pos < raw_text.size(); ++pos) {
    const char c = raw_text[pos];
    if (c != '{' && c != '[') continue;
    const size_t end = find_document_end(raw_text, pos);
    if (end == std::string::npos) continue;
    const auto doc = nlohmann::json::parse(raw_text.substr(pos, end - pos + 1), nullptr,
                                           /*allow_exceptions=*/false);
    if (!doc.is_discarded()) return doc;
  }
  raise(Errc::not_structured, "no parsable JSON document in completion");
}

}  // namespace sage
