#include "pirate/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <thread>

#include "pirate/errors.hpp"

namespace pirate {
namespace {

using Clock = std::chrono::steady_clock;

struct ParsedUrl {
  std::string scheme_host_port;
  std::string base_path;
};

ParsedUrl split_endpoint(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ContractViolation("endpoint must include a scheme: " + endpoint);
  auto path_start = endpoint.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = endpoint;
  } else {
    out.scheme_host_port = endpoint.substr(0, path_start);
    out.base_path = endpoint.substr(path_start);
    while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
  }
  return out;
}

void set_timeout(httplib::Client& cli, double seconds) {
  auto us = std::chrono::microseconds(static_cast<long long>(std::max(seconds, 0.001) * 1e6));
  auto s = std::chrono::duration_cast<std::chrono::seconds>(us);
  auto rest = us - s;
  cli.set_connection_timeout(s.count(), rest.count());
  cli.set_read_timeout(s.count(), rest.count());
  cli.set_write_timeout(s.count(), rest.count());
}

}  // namespace

struct JsonHttpClient::Impl {
  std::string endpoint;
  ParsedUrl url;
  HttpOptions options;

  template <typename Send>
  nlohmann::json call(const std::string& path, Send&& send) const {
    const auto budget = std::chrono::duration<double>(options.timeout_s * (options.retries + 1));
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(budget);
    double backoff = options.backoff_initial_s;
    std::string last_error;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
      const double remaining = std::chrono::duration<double>(deadline - Clock::now()).count();
      if (remaining <= 0.0) break;
      httplib::Client cli(url.scheme_host_port);
      set_timeout(cli, std::min(options.timeout_s, remaining));
      if (!options.bearer_token.empty()) cli.set_bearer_token_auth(options.bearer_token);
      httplib::Result res = send(cli, url.base_path + path);
      if (!res) {
        last_error = httplib::to_string(res.error());
      } else if (res->status < 200 || res->status >= 300) {
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
          throw ProtocolError(std::string("response is not JSON: ") + e.what());
        }
      }
      if (attempt == options.retries) break;
      const double left = std::chrono::duration<double>(deadline - Clock::now()).count();
      const double pause = std::min(backoff, std::max(0.0, left - 0.001));
      if (pause > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(pause));
      backoff *= 2.0;
    }
    throw TransportError(endpoint + path + ": " + (last_error.empty() ? "deadline exceeded" : last_error));
  }
};

JsonHttpClient::JsonHttpClient(std::string endpoint, HttpOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->url = split_endpoint(endpoint);
  impl_->endpoint = std::move(endpoint);
  impl_->options = options;
  if (options.retries < 0) throw ContractViolation("retries must be >= 0");
  if (!(options.timeout_s > 0.0)) throw ContractViolation("timeout must be positive");
}

JsonHttpClient::~JsonHttpClient() = default;
JsonHttpClient::JsonHttpClient(JsonHttpClient&&) noexcept = default;
JsonHttpClient& JsonHttpClient::operator=(JsonHttpClient&&) noexcept = default;

nlohmann::json JsonHttpClient::post(const std::string& path, const nlohmann::json& body) const {
  const std::string payload = body.dump();
  return impl_->call(path, [&](httplib::Client& cli, const std::string& full) {
    return cli.Post(full, payload, "application/json");
  });
}

nlohmann::json JsonHttpClient::get(const std::string& path) const {
  return impl_->call(path, [&](httplib::Client& cli, const std::string& full) { return cli.Get(full); });
}

const std::string& JsonHttpClient::endpoint() const noexcept { return impl_->endpoint; }
const HttpOptions& JsonHttpClient::options() const noexcept { return impl_->options; }

}  // namespace pirate
