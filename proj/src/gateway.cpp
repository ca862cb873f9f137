#include "finnews/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "finnews/json_io.hpp"
#include "finnews/text.hpp"

namespace finnews {

namespace {

std::string extract_text(const BackendReply& reply) {
  if (reply.body.empty()) {
    throw GatewayError(GatewayErrorKind::malformed_payload, "backend returned an empty body");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(reply.body);
  } catch (const nlohmann::json::parse_error&) {
    throw GatewayError(GatewayErrorKind::malformed_payload, "backend body is not JSON");
  }
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw GatewayError(GatewayErrorKind::malformed_payload, "backend body lacks a string 'text' field");
  }
  auto text = j["text"].get<std::string>();
  if (text.empty()) throw GatewayError(GatewayErrorKind::malformed_payload, "backend returned empty text");
  return text;
}

}  // namespace

std::string_view to_string(GatewayErrorKind kind) {
  switch (kind) {
    case GatewayErrorKind::timeout: return "timeout";
    case GatewayErrorKind::retries_exhausted: return "retries-exhausted";
    case GatewayErrorKind::malformed_payload: return "malformed-payload";
    case GatewayErrorKind::client_error: return "client-error";
    case GatewayErrorKind::fixture_miss: return "fixture-miss";
    case GatewayErrorKind::invalid_request: return "invalid-request";
  }
  return "unknown";
}

nlohmann::json make_wire_request(const std::string& prompt, const GenerationParams& params) {
  return {{"prompt", prompt},
          {"max_new_tokens", params.max_new_tokens},
          {"temperature", params.temperature},
          {"stop", params.stop_sequences}};
}

GatewayConfig gateway_config_from_env(GatewayConfig base) {
  if (const char* v = std::getenv("FINNEWS_LLM_URL"); v && *v) base.url = v;
  if (const char* v = std::getenv("FINNEWS_LLM_KEY"); v && *v) base.api_key = v;
  if (const char* v = std::getenv("FINNEWS_LLM_TIMEOUT_S"); v && *v) {
    const auto s = parse_double(v);
    if (!s || *s <= 0) throw std::invalid_argument("FINNEWS_LLM_TIMEOUT_S must be a positive number");
    base.timeout = std::chrono::milliseconds(static_cast<long long>(*s * 1000));
  }
  if (const char* v = std::getenv("FINNEWS_LLM_RETRIES"); v && *v) {
    const auto r = parse_double(v);
    if (!r || *r < 0 || *r != static_cast<int>(*r)) {
      throw std::invalid_argument("FINNEWS_LLM_RETRIES must be a non-negative integer");
    }
    base.max_retries = static_cast<int>(*r);
  }
  return base;
}

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, GatewayConfig config, Sleeper sleeper)
    : backend_(std::move(backend)), config_(std::move(config)), sleeper_(std::move(sleeper)) {
  if (!backend_) throw std::invalid_argument("Gateway: backend is null");
  if (config_.max_retries < 0) throw std::invalid_argument("Gateway: max_retries must be >= 0");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

CompletionResult Gateway::complete(const std::string& prompt, const GenerationParams& params) const {
  if (prompt.empty()) throw GatewayError(GatewayErrorKind::invalid_request, "empty prompt");
  if (params.max_new_tokens < 1 || !(params.temperature >= 0.0)) {
    throw GatewayError(GatewayErrorKind::invalid_request, "invalid generation parameters");
  }
  const auto request = make_wire_request(prompt, params);
  const auto start = std::chrono::steady_clock::now();
  const int max_attempts = config_.max_retries + 1;
  auto backoff = std::chrono::duration<double, std::milli>(config_.backoff_base);
  std::string last_error;
  bool last_timed_out = false;

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    BackendReply reply;
    try {
      reply = backend_->post(request, config_.timeout);
    } catch (const TransportError& e) {
      last_error = e.what();
      last_timed_out = e.timed_out();
      if (attempt < max_attempts) {
        sleeper_(std::chrono::duration_cast<std::chrono::milliseconds>(backoff));
        backoff *= config_.backoff_factor;
      }
      continue;
    } catch (const GatewayError& e) {
      throw GatewayError(e.kind(), e.what(), attempt);
    }

    if (reply.status >= 200 && reply.status < 300) {
      try {
        CompletionResult result;
        result.text = extract_text(reply);
        result.backend_id = backend_->id();
        result.attempt_count = attempt;
        result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        return result;
      } catch (const GatewayError& e) {
        throw GatewayError(e.kind(), e.what(), attempt);
      }
    }
    if (reply.status >= 400 && reply.status < 500) {
      throw GatewayError(GatewayErrorKind::client_error,
                         "backend rejected request with status " + std::to_string(reply.status), attempt);
    }
    if (reply.status < 500) {
      throw GatewayError(GatewayErrorKind::malformed_payload,
                         "unexpected backend status " + std::to_string(reply.status), attempt);
    }
    last_error = "backend status " + std::to_string(reply.status);
    last_timed_out = false;
    if (attempt < max_attempts) {
      sleeper_(std::chrono::duration_cast<std::chrono::milliseconds>(backoff));
      backoff *= config_.backoff_factor;
    }
  }
  throw GatewayError(last_timed_out ? GatewayErrorKind::timeout : GatewayErrorKind::retries_exhausted,
                     "gave up after " + std::to_string(max_attempts) + " attempt(s): " + last_error,
                     max_attempts);
}

std::vector<Gateway::BatchItem> Gateway::complete_batch(const std::vector<std::string>& prompts,
                                                        const GenerationParams& params,
                                                        std::size_t parallelism) const {
  if (parallelism == 0) throw std::invalid_argument("complete_batch: parallelism must be >= 1");
  std::vector<BatchItem> results(prompts.size(), Failure{GatewayErrorKind::invalid_request, "not run"});
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        results[i] = complete(prompts[i], params);
      } catch (const GatewayError& e) {
        results[i] = Failure{e.kind(), e.what()};
      } catch (const std::exception& e) {
        results[i] = Failure{GatewayErrorKind::invalid_request, e.what()};
      }
    }
  };
  const std::size_t n_workers = std::min(parallelism, prompts.size());
  std::vector<std::jthread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  return results;
}

BackendReply MockBackend::post(const nlohmann::json& request, std::chrono::milliseconds) {
  ++requests_;
  const std::size_t now = ++in_flight_;
  std::size_t seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& counter;
    ~Leave() { --counter; }
  } leave{in_flight_};

  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  const std::string prompt = request.value("prompt", std::string{});
  const std::string key = sha256_hex(prompt);
  {
    std::unique_lock lock(mutex_);
    if (auto it = permanent_.find(key); it != permanent_.end()) {
      const Fault f = it->second;
      lock.unlock();
      return apply(f);
    }
    if (auto it = scripted_.find(key); it != scripted_.end() && !it->second.empty()) {
      const Fault f = it->second.front();
      it->second.pop_front();
      lock.unlock();
      return apply(f);
    }
  }
  std::shared_lock lock(mutex_);
  const auto it = fixtures_.find(key);
  if (it == fixtures_.end()) {
    throw GatewayError(GatewayErrorKind::fixture_miss, "no mock fixture for prompt sha256 " + key);
  }
  return {200, dump_line(nlohmann::json{{"text", it->second}})};
}

BackendReply MockBackend::apply(Fault fault) {
  switch (fault) {
    case Fault::transport: throw TransportError("injected transport failure", false);
    case Fault::timeout: throw TransportError("injected timeout", true);
    case Fault::server_error: return {503, "service unavailable"};
    case Fault::client_error: return {400, "bad request"};
    case Fault::empty_body: return {200, ""};
    case Fault::not_json: return {200, "<html>oops</html>"};
  }
  return {500, ""};
}

MockBackend::Registration MockBackend::register_fixture(const std::string& prompt,
                                                        const std::string& response_text) {
  Registration reg{sha256_hex(prompt), false};
  std::unique_lock lock(mutex_);
  auto [it, inserted] = fixtures_.insert_or_assign(reg.fixture_id, response_text);
  reg.replaced = !inserted;
  if (reg.replaced) std::clog << "warning: mock fixture " << reg.fixture_id << " replaced\n";
  return reg;
}

std::size_t MockBackend::fixture_count() const {
  std::shared_lock lock(mutex_);
  return fixtures_.size();
}

std::size_t MockBackend::load_fixtures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open fixture file " + path.string());
  std::string line;
  std::size_t line_no = 0, loaded = 0;
  std::unique_lock lock(mutex_);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto hash = to_lower_ascii(j.at("prompt_sha256").get<std::string>());
      if (hash.size() != 64 || hash.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw std::runtime_error("prompt_sha256 is not a 64-digit hex string");
      }
      fixtures_.insert_or_assign(hash, j.at("text").get<std::string>());
      ++loaded;
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return loaded;
}

void MockBackend::save_fixtures(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write fixture file " + path.string());
  std::shared_lock lock(mutex_);
  std::map<std::string, std::string> sorted(fixtures_.begin(), fixtures_.end());
  for (const auto& [hash, text] : sorted) {
    out << dump_line(nlohmann::ordered_json{{"prompt_sha256", hash}, {"text", text}}) << '\n';
  }
}

void MockBackend::inject_faults(const std::string& prompt, std::vector<Fault> faults) {
  std::unique_lock lock(mutex_);
  auto& q = scripted_[sha256_hex(prompt)];
  q.insert(q.end(), faults.begin(), faults.end());
}

void MockBackend::fail_always(const std::string& prompt, Fault fault) {
  std::unique_lock lock(mutex_);
  permanent_[sha256_hex(prompt)] = fault;
}

}  // namespace finnews
