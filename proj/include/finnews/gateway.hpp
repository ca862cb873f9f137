#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace finnews {

struct GenerationParams {
  int max_new_tokens = 1024;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences;
};

struct CompletionResult {
  std::string text;
  std::string backend_id;
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
};

enum class GatewayErrorKind {
  timeout,
  retries_exhausted,
  malformed_payload,
  client_error,
  fixture_miss,
  invalid_request,
};

std::string_view to_string(GatewayErrorKind kind);

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& message, int attempts = 0)
      : std::runtime_error(message), kind_(kind), attempts_(attempts) {}
  GatewayErrorKind kind() const noexcept { return kind_; }
  int attempts() const noexcept { return attempts_; }

 private:
  GatewayErrorKind kind_;
  int attempts_;
};

// Raised by backends for connection-level failures. Retried by the gateway.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& message, bool timed_out)
      : std::runtime_error(message), timed_out_(timed_out) {}
  bool timed_out() const noexcept { return timed_out_; }

 private:
  bool timed_out_;
};

struct BackendReply {
  int status = 200;
  std::string body;
};

// One POST of the wire request {"prompt", "max_new_tokens", "temperature",
// "stop"}; a 2xx body must be {"text": string}.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string id() const = 0;
  virtual BackendReply post(const nlohmann::json& request, std::chrono::milliseconds timeout) = 0;
};

nlohmann::json make_wire_request(const std::string& prompt, const GenerationParams& params);

struct GatewayConfig {
  std::string url;
  std::string api_key;
  std::chrono::milliseconds timeout{120'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1'000};
  double backoff_factor = 2.0;
};

// Reads FINNEWS_LLM_URL, FINNEWS_LLM_KEY, FINNEWS_LLM_TIMEOUT_S and
// FINNEWS_LLM_RETRIES over `base`.
GatewayConfig gateway_config_from_env(GatewayConfig base = {});

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class Gateway {
 public:
  Gateway(std::shared_ptr<CompletionBackend> backend, GatewayConfig config = {},
          Sleeper sleeper = {});

  // Backend text is returned verbatim. Transport errors and 5xx replies are
  // retried with exponential backoff; 4xx replies and bad payloads are not.
  CompletionResult complete(const std::string& prompt, const GenerationParams& params) const;

  struct Failure {
    GatewayErrorKind kind;
    std::string message;
  };
  using BatchItem = std::variant<CompletionResult, Failure>;

  // Results align with `prompts`; at most `parallelism` requests run at once.
  std::vector<BatchItem> complete_batch(const std::vector<std::string>& prompts,
                                        const GenerationParams& params, std::size_t parallelism) const;

  const GatewayConfig& config() const noexcept { return config_; }

 private:
  std::shared_ptr<CompletionBackend> backend_;
  GatewayConfig config_;
  Sleeper sleeper_;
};

// Deterministic offline backend keyed by SHA-256 of the prompt. Supports
// scripted faults and records peak concurrency for tests.
class MockBackend : public CompletionBackend {
 public:
  struct Registration {
    std::string fixture_id;
    bool replaced = false;
  };

  std::string id() const override { return "mock"; }
  BackendReply post(const nlohmann::json& request, std::chrono::milliseconds timeout) override;

  Registration register_fixture(const std::string& prompt, const std::string& response_text);
  std::size_t fixture_count() const;

  // JSONL of {"prompt_sha256", "text"}.
  std::size_t load_fixtures(const std::filesystem::path& path);
  void save_fixtures(const std::filesystem::path& path) const;

  enum class Fault { transport, timeout, server_error, client_error, empty_body, not_json };
  // Queues faults returned before the fixture for this prompt is served.
  void inject_faults(const std::string& prompt, std::vector<Fault> faults);
  // Every request for this prompt fails with `fault`.
  void fail_always(const std::string& prompt, Fault fault);

  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }
  std::size_t max_in_flight() const noexcept { return max_in_flight_.load(); }
  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  BackendReply apply(Fault fault);

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> fixtures_;
  std::unordered_map<std::string, std::deque<Fault>> scripted_;
  std::unordered_map<std::string, Fault> permanent_;
  std::chrono::milliseconds latency_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
  std::atomic<std::size_t> requests_{0};
};

// POSTs the wire request to config.url via cpp-httplib, with a bearer token
// when api_key is set.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(GatewayConfig config);
  std::string id() const override { return config_.url; }
  BackendReply post(const nlohmann::json& request, std::chrono::milliseconds timeout) override;

 private:
  GatewayConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace finnews
