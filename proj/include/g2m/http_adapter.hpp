#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>

#include "g2m/harness.hpp"

namespace g2m {

// Where the instruction text goes: alongside the image in the user turn, or in a system turn before it.
enum class PromptRole { User, System };

struct HttpConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1; the request goes to <base>/chat/completions
  std::string model;
  std::string api_key;
  std::string token_field = "max_tokens";
  PromptRole prompt_role = PromptRole::User;
  int timeout_seconds = 120;
  int max_attempts = 6;
  int base_delay_ms = 1000;
  int max_delay_ms = 60000;
  std::uint64_t jitter_seed = 0;

  // G2M_API_BASE and G2M_API_KEY fill whatever is still empty.
  static HttpConfig from_env(HttpConfig config);
};

// OpenAI-compatible chat completions with the grid attached as a base64 PNG data URL.
class HttpAdapter : public ModelAdapter {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpAdapter(HttpConfig config, Sleeper sleeper = {});

  std::string kind() const override { return "http"; }
  std::string label() const override { return config_.model; }
  // Retries 408/429/5xx and connection failures with capped exponential backoff and jitter.
  QueryResult query(const QueryRequest& request) override;

  static std::string request_body(const HttpConfig& config, const QueryRequest& request);
  // choices[0].message.content when the body is a chat completion, else the body verbatim.
  static std::string extract_text(const std::string& body);
  static bool retryable(int status);

 private:
  std::chrono::milliseconds backoff(int attempt);

  HttpConfig config_;
  Sleeper sleeper_;
  std::mutex jitter_mutex_;
  std::uint64_t jitter_state_;
};

}  // namespace g2m
