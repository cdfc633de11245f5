#pragma once

// Request/reply server for the local control ports: every decoded frame is
// passed to the handler and its replies are written back on the same
// connection. The handler runs on the connection's thread and must be
// thread-safe.

#include <atomic>
#include <functional>
#include <list>
#include <mutex>
#include <thread>
#include <vector>

#include "harbour/net/socket.hpp"
#include "harbour/rti/protocol.hpp"

namespace harbour::rti {

using Handler = std::function<std::vector<FedMessage>(const FedMessage&)>;

class LocalService {
 public:
  /// Binds immediately; throws net::BindError.
  LocalService(const net::Endpoint& ep, Handler handler, std::string name);
  ~LocalService();
  LocalService(const LocalService&) = delete;
  LocalService& operator=(const LocalService&) = delete;

  std::uint16_t port() const { return listener_.port(); }
  void start();
  void stop();

 private:
  struct Conn {
    net::Socket socket;
    std::thread thread;
    std::atomic<bool> done{false};
  };
  void serve(Conn& c);

  net::Listener listener_;
  Handler handler_;
  std::string name_;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mutex_;
  std::list<Conn> conns_;
};

/// One request, one reply list: connects, sends, reads until a reply
/// arrives. For command-line clients and tests.
class LocalClient {
 public:
  explicit LocalClient(const net::Endpoint& ep,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));
  /// Throws net::NetError on timeout or a closed connection.
  FedMessage request(MsgType type, nlohmann::json payload = nlohmann::json::object(),
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

 private:
  net::Socket socket_;
  FrameDecoder decoder_;
  std::uint64_t seq_ = 0;
};

}  // namespace harbour::rti
