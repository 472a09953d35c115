#include "g2m/http_adapter.hpp"

#include <algorithm>
#include <cstdlib>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <thread>

#include "g2m/error.hpp"
#include "g2m/splitmix.hpp"

namespace g2m {

using nlohmann::json;

HttpConfig HttpConfig::from_env(HttpConfig config) {
  if (config.base_url.empty()) {
    if (const char* v = std::getenv("G2M_API_BASE")) config.base_url = v;
  }
  if (config.api_key.empty()) {
    if (const char* v = std::getenv("G2M_API_KEY")) config.api_key = v;
  }
  return config;
}

HttpAdapter::HttpAdapter(HttpConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)), jitter_state_(config_.jitter_seed) {
  if (config_.base_url.empty()) throw InvalidSpec("http adapter needs a base URL (--endpoint or G2M_API_BASE)");
  if (config_.max_attempts < 1) throw InvalidSpec("max_attempts must be >= 1");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpAdapter::request_body(const HttpConfig& config, const QueryRequest& request) {
  const std::string png(request.png.begin(), request.png.end());
  const json image = {{"type", "image_url"},
                      {"image_url", {{"url", "data:image/png;base64," + httplib::detail::base64_encode(png)}}}};
  json body;
  body["model"] = config.model;
  body["temperature"] = 0;
  body[config.token_field] = request.max_tokens;
  if (config.prompt_role == PromptRole::System) {
    body["messages"] = json::array({{{"role", "system"}, {"content", request.prompt}},
                                    {{"role", "user"}, {"content", json::array({image})}}});
  } else {
    json content = json::array({{{"type", "text"}, {"text", request.prompt}}, image});
    body["messages"] = json::array({{{"role", "user"}, {"content", content}}});
  }
  return body.dump();
}

std::string HttpAdapter::extract_text(const std::string& body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return body;
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return body;
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message")) return body;
  const auto& message = first["message"];
  if (!message.is_object() || !message.contains("content")) return body;
  const auto& content = message["content"];
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string text;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") && part["text"].is_string()) {
        text += part["text"].get<std::string>();
      }
    }
    return text;
  }
  return body;
}

bool HttpAdapter::retryable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

std::chrono::milliseconds HttpAdapter::backoff(int attempt) {
  const double cap = config_.max_delay_ms;
  const double raw = std::min(cap, config_.base_delay_ms * std::pow(2.0, attempt - 1));
  double u;
  {
    std::lock_guard lock(jitter_mutex_);
    SplitMix64 rng(jitter_state_);
    u = rng.uniform();
    jitter_state_ = rng.next();
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(raw * (0.5 + 0.5 * u)));
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw InvalidSpec("endpoint must include a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  Endpoint e{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  e.path += "/chat/completions";
  return e;
}

}  // namespace

QueryResult HttpAdapter::query(const QueryRequest& request) {
  const Endpoint endpoint = split_url(config_.base_url);
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(std::chrono::seconds(std::min(config_.timeout_seconds, 30)));
  client.set_read_timeout(std::chrono::seconds(config_.timeout_seconds));
  client.set_write_timeout(std::chrono::seconds(config_.timeout_seconds));
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const std::string body = request_body(config_, request);

  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    auto res = client.Post(endpoint.path, headers, body, "application/json");
    if (res && res->status >= 200 && res->status < 300) return {extract_text(res->body), attempt};
    if (res) {
      last_status = res->status;
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
    } else {
      last_status = 0;
      last_error = "connection failed: " + httplib::to_string(res.error());
    }
    if (!retryable(last_status)) throw TransportError(last_error, last_status, attempt);
    if (attempt == config_.max_attempts) break;
    auto delay = backoff(attempt);
    if (res && res->has_header("Retry-After")) {
      const int seconds = std::atoi(res->get_header_value("Retry-After").c_str());
      if (seconds > 0) delay = std::max(delay, std::chrono::milliseconds(std::min(seconds * 1000, config_.max_delay_ms)));
    }
    sleeper_(delay);
  }
  throw TransportError("retries exhausted; last error " + last_error, last_status, config_.max_attempts);
}

}  // namespace g2m
