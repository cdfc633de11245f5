#pragma once

// Browser-facing adapter for a federate's local protocol. A websocket at
// /ws carries the same JSON message bodies as the local port, one per text
// frame; requests go to the federate's handler and the replies come back on
// the same socket. The gateway also pushes the reply to a fixed request
// (snapshot or picture) at a steady rate, and can serve static files.

#include <memory>
#include <string>

#include "harbour/net/socket.hpp"
#include "harbour/rti/service.hpp"

namespace harbour::gateway {

/// Browser endpoint port for a federate whose local port is `local`.
inline std::uint16_t gateway_port(std::uint16_t local) {
  return static_cast<std::uint16_t>(local + 1000);
}

struct GatewayOptions {
  net::Endpoint endpoint{"127.0.0.1", 0};
  std::string static_dir;  // empty: /ws only
  rti::MsgType push_request = rti::MsgType::SNAPSHOT_REQUEST;
  nlohmann::json push_payload = nlohmann::json::object();
  double push_rate = 10.0;  // Hz, 0 disables pushing
  std::string name = "gateway";
};

class Gateway {
 public:
  /// Binds immediately; throws net::BindError.
  Gateway(GatewayOptions options, rti::Handler handler);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  std::uint16_t port() const;
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace harbour::gateway
