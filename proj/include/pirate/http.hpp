#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

namespace pirate {

struct HttpOptions {
  double timeout_s = 30.0;
  int retries = 2;
  double backoff_initial_s = 0.05;
  std::string bearer_token;
};

// POSTs JSON to an OpenAI-style endpoint. Transient failures (connection
// errors, timeouts, non-2xx) are retried with exponential backoff; the whole
// call never takes longer than (retries + 1) * timeout_s.
class JsonHttpClient {
 public:
  // endpoint: scheme://host[:port][/base/path]
  JsonHttpClient(std::string endpoint, HttpOptions options);
  ~JsonHttpClient();
  JsonHttpClient(JsonHttpClient&&) noexcept;
  JsonHttpClient& operator=(JsonHttpClient&&) noexcept;

  // Throws TransportError after exhausting retries, ProtocolError on a 2xx
  // response whose body is not JSON.
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  nlohmann::json get(const std::string& path) const;

  const std::string& endpoint() const noexcept;
  const HttpOptions& options() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pirate
