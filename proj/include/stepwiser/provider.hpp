#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace stepwiser {

enum class Role { System, User, Assistant };

std::string to_string(Role role);
Role role_from_string(std::string_view text);

struct Message {
  Role role = Role::User;
  std::string text;
};

struct GenerationRequest {
  std::vector<Message> messages;
  double temperature = 1.0;
  int max_tokens = 8192;
  int n = 1;
  std::vector<std::string> stop;
  // Base seed for this request; sample i uses seed + i. Backends that cannot
  // honor seeds ignore it, but it always participates in fixture keys.
  std::optional<std::uint64_t> seed;
};

struct GenerationResponse {
  std::vector<std::string> texts;        // exactly request.n entries
  std::vector<int> token_counts;         // per-completion counts
};

// Canonical JSON form of a request: all fields, deterministic key order.
nlohmann::json canonical_request_json(const GenerationRequest& request);
std::string request_digest(const GenerationRequest& request);

nlohmann::json to_json(const GenerationResponse& response);
GenerationResponse response_from_json(const nlohmann::json& j);

struct ProviderConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model = "default";
  std::string api_key_env = "STEPWISER_API_KEY";
  int max_in_flight = 4;
  int timeout_ms = 120000;
  int max_retries = 3;       // retries after the first attempt
  int retry_backoff_ms = 200;
};

// Uniform generation seam. Remote endpoints, fixture replay, and the
// simulated policy all sit behind this interface.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

struct HttpResult {
  int status = 0;        // 0 = connection-level failure
  std::string body;
  std::string error;     // transport-level description when status == 0
};

// Seam below the HTTP generator so tests can count in-flight requests and
// inject faults without sockets.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post_json(const std::string& base_url, const std::string& path,
                               const std::vector<std::pair<std::string, std::string>>& headers,
                               const std::string& body, int timeout_ms) = 0;
};

std::shared_ptr<HttpTransport> make_httplib_transport();

// Chat-completions client. A logical request with n samples fans out as n
// single-sample wire requests, at most max_in_flight outstanding; completions
// are aggregated by sample index regardless of network completion order.
class HttpGenerator : public Generator {
 public:
  explicit HttpGenerator(ProviderConfig config,
                         std::shared_ptr<HttpTransport> transport = nullptr);

  GenerationResponse generate(const GenerationRequest& request) override;

  // Append-only per-attempt log ("sample 0 attempt 1: HTTP 429"), kept for
  // diagnosis of retried-but-successful calls.
  std::vector<std::string> attempt_log() const;

 private:
  struct Sample {
    std::string text;
    int token_count = 0;
  };
  Sample fetch_sample(const GenerationRequest& request, int sample_index);
  void log_attempt(const std::string& line);

  ProviderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  mutable std::mutex log_mutex_;
  std::vector<std::string> attempts_;
};

}  // namespace stepwiser
