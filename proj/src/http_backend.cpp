#include <httplib.h>

#include "finnews/gateway.hpp"
#include "finnews/json_io.hpp"

namespace finnews {

HttpBackend::HttpBackend(GatewayConfig config) : config_(std::move(config)) {
  const std::string& url = config_.url;
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw std::invalid_argument("backend URL must look like http://host[:port]/path, got '" + url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("unsupported URL scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

BackendReply HttpBackend::post(const nlohmann::json& request, std::chrono::milliseconds timeout) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, dump_line(request), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= timeout * 9 / 10);
    throw TransportError("HTTP " + httplib::to_string(err) + " talking to " + config_.url, timed_out);
  }
  return {res->status, res->body};
}

}  // namespace finnews
