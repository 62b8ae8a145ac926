#include <algorithm>
#include <thread>

#include <httplib.h>

#include "kgalign/error.hpp"
#include "kgalign/llm_gateway.hpp"

namespace kgalign {

namespace {

bool is_transient(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

HttpChatBackend::HttpChatBackend(HttpConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::ConfigError, "endpoint must be an absolute URL: " + config_.endpoint);
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  origin_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions"
                                          : config_.endpoint.substr(path_start);
  if (config_.max_retries < 0) throw Error(ErrorKind::ConfigError, "max_retries < 0");
}

std::string HttpChatBackend::complete(const CompletionRequest& request) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const std::string body = chat_request_body(request);

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::chrono::milliseconds delay = config_.backoff_base * (1LL << std::min(attempt - 1, 20));
      delay = std::min(delay, config_.backoff_cap);
      std::this_thread::sleep_for(delay);
    }
    const auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_failure = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return chat_response_content(res->body);
    if (is_transient(res->status)) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw Error(ErrorKind::ApiError,
                "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  throw Error(ErrorKind::TransportError, std::to_string(config_.max_retries + 1) +
                                             " attempts failed, last: " + last_failure);
}

}  // namespace kgalign
