// Small blocking HTTP and WebSocket helpers for talking to a Service in tests.
#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace aifml::testing {

struct HttpResult {
  int status = 0;
  std::string body;
};

HttpResult http_request(std::uint16_t port, const std::string& method, const std::string& target,
                        const std::string& body = "", const std::string& content_type = "application/json");

class EventClient {
 public:
  explicit EventClient(std::uint16_t port);
  ~EventClient();
  /// Next text frame, or nullopt after `timeout`.
  std::optional<std::string> next(std::chrono::milliseconds timeout);
  /// Skips frames until one contains `needle`.
  std::optional<std::string> wait_for(const std::string& needle, std::chrono::milliseconds timeout);

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace aifml::testing
