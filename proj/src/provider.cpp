#include "stepwiser/provider.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "stepwiser/core.hpp"
#include "stepwiser/errors.hpp"
#include "stepwiser/rng.hpp"

namespace stepwiser {

std::string to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view text) {
  if (text == "system") return Role::System;
  if (text == "user") return Role::User;
  if (text == "assistant") return Role::Assistant;
  throw DataError("unknown role: '" + std::string(text) + "'");
}

nlohmann::json canonical_request_json(const GenerationRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const Message& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
  }
  nlohmann::json j{{"messages", messages},
                   {"temperature", request.temperature},
                   {"max_tokens", request.max_tokens},
                   {"n", request.n},
                   {"stop", request.stop}};
  if (request.seed) {
    j["seed"] = *request.seed;
  } else {
    j["seed"] = nullptr;
  }
  return j;
}

std::string request_digest(const GenerationRequest& request) {
  return hex_digest(canonical_request_json(request).dump());
}

nlohmann::json to_json(const GenerationResponse& response) {
  return {{"texts", response.texts}, {"token_counts", response.token_counts}};
}

GenerationResponse response_from_json(const nlohmann::json& j) {
  GenerationResponse r;
  r.texts = j.at("texts").get<std::vector<std::string>>();
  r.token_counts = j.at("token_counts").get<std::vector<int>>();
  if (r.token_counts.size() != r.texts.size()) {
    throw DataError("generation response texts/token_counts size mismatch");
  }
  return r;
}

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttpResult post_json(const std::string& base_url, const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       const std::string& body, int timeout_ms) override {
    // base_url may carry a path prefix ("http://host:port/v1"); httplib
    // clients only take the origin.
    std::string origin = base_url;
    std::string prefix;
    const std::size_t scheme = base_url.find("://");
    if (scheme != std::string::npos) {
      const std::size_t slash = base_url.find('/', scheme + 3);
      if (slash != std::string::npos) {
        origin = base_url.substr(0, slash);
        prefix = base_url.substr(slash);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
      }
    }
    httplib::Client client(origin);
    client.set_connection_timeout(0, timeout_ms * 1000LL);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(prefix + path, h, body, "application/json");
    if (!res) {
      return {0, "", httplib::to_string(res.error())};
    }
    return {res->status, res->body, ""};
  }
};

bool retryable_status(int status) {
  return status == 0 || status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport() {
  return std::make_shared<HttplibTransport>();
}

HttpGenerator::HttpGenerator(ProviderConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_httplib_transport()) {
  if (config_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

void HttpGenerator::log_attempt(const std::string& line) {
  std::lock_guard<std::mutex> lock(log_mutex_);
  attempts_.push_back(line);
}

std::vector<std::string> HttpGenerator::attempt_log() const {
  std::lock_guard<std::mutex> lock(log_mutex_);
  return attempts_;
}

HttpGenerator::Sample HttpGenerator::fetch_sample(const GenerationRequest& request,
                                                  int sample_index) {
  nlohmann::json messages = nlohmann::json::array();
  for (const Message& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
  }
  nlohmann::json body{{"model", config_.model},
                      {"messages", messages},
                      {"temperature", request.temperature},
                      {"max_tokens", request.max_tokens},
                      {"n", 1}};
  if (!request.stop.empty()) body["stop"] = request.stop;
  if (request.seed) body["seed"] = *request.seed + static_cast<std::uint64_t>(sample_index);

  std::vector<std::pair<std::string, std::string>> headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }

  const std::string payload = body.dump();
  std::vector<std::string> attempts;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const int exponent = std::min(attempt - 1, 10);
      const auto backoff = std::chrono::milliseconds(config_.retry_backoff_ms) * (1 << exponent);
      std::this_thread::sleep_for(backoff);
    }
    HttpResult res = transport_->post_json(config_.base_url, "/chat/completions", headers,
                                           payload, config_.timeout_ms);
    std::string line = "sample " + std::to_string(sample_index) + " attempt " +
                       std::to_string(attempt + 1) + ": " +
                       (res.status == 0 ? "transport error: " + res.error
                                        : "HTTP " + std::to_string(res.status));
    attempts.push_back(line);
    log_attempt(line);
    if (res.status == 200) {
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(res.body);
      } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("unparseable response body: ") + e.what());
      }
      if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
          parsed["choices"].empty() || !parsed["choices"][0].contains("message") ||
          !parsed["choices"][0]["message"].contains("content")) {
        throw ProtocolError("response body missing choices[0].message.content");
      }
      Sample sample;
      sample.text = parsed["choices"][0]["message"]["content"].get<std::string>();
      if (parsed.contains("usage") && parsed["usage"].contains("completion_tokens")) {
        sample.token_count = parsed["usage"]["completion_tokens"].get<int>();
      } else {
        sample.token_count = approx_token_count(sample.text);
      }
      return sample;
    }
    if (!retryable_status(res.status)) {
      throw TransportError("HTTP " + std::to_string(res.status) + " from " + config_.base_url,
                           attempts);
    }
  }
  throw TransportError("retry budget exhausted for " + config_.base_url, attempts);
}

GenerationResponse HttpGenerator::generate(const GenerationRequest& request) {
  if (request.messages.empty()) throw ConfigError("generation request has no messages");
  if (request.n < 1) throw ConfigError("generation request n must be >= 1");

  const int n = request.n;
  std::vector<Sample> samples(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!failed.load()) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        samples[static_cast<std::size_t>(i)] = fetch_sample(request, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  const int workers = std::min(config_.max_in_flight, n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  GenerationResponse response;
  response.texts.reserve(static_cast<std::size_t>(n));
  response.token_counts.reserve(static_cast<std::size_t>(n));
  for (const Sample& s : samples) {
    response.texts.push_back(s.text);
    response.token_counts.push_back(s.token_count);
  }
  return response;
}

}  // namespace stepwiser
