#pragma once

// TCP front end of the Router: one reader and one writer thread per
// connection, and a single routing thread that owns the Router and polls
// liveness.

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "harbour/net/socket.hpp"
#include "harbour/rti/router.hpp"

namespace harbour::rti {

struct ServerOptions {
  net::Endpoint endpoint{"127.0.0.1", kDefaultPort};
  double heartbeat_interval = 1.0;  // s
  double poll_interval = 0.05;      // s, liveness tick
  std::size_t queue_bound = 256;    // messages per subscriber
};

class RtiServer {
 public:
  /// Binds immediately; throws net::BindError.
  explicit RtiServer(ServerOptions options);
  ~RtiServer();
  RtiServer(const RtiServer&) = delete;
  RtiServer& operator=(const RtiServer&) = delete;

  std::uint16_t port() const { return listener_.port(); }
  void start();
  void stop();

  std::vector<std::string> federates() const;
  std::vector<std::string> forced_resigns() const;
  /// UPDATEs dropped or coalesced across all subscriber queues.
  std::uint64_t dropped_updates() const;

 private:
  struct Connection {
    ConnId id = 0;
    net::Socket socket;
    std::mutex mutex;
    std::condition_variable cv;
    OutboundQueue queue;
    bool closed = false;
    std::thread reader, writer;

    explicit Connection(std::size_t bound) : queue(bound) {}
  };

  struct Inbound {
    ConnId from = 0;
    std::optional<FedMessage> msg;  // empty: connection closed
  };

  void accept_loop();
  void read_loop(std::shared_ptr<Connection> c);
  void write_loop(std::shared_ptr<Connection> c);
  void route_loop();
  void deliver(const std::vector<Outgoing>& out);
  void close_connection(const std::shared_ptr<Connection>& c);
  double now() const;

  ServerOptions options_;
  net::Listener listener_;
  std::chrono::steady_clock::time_point start_;
  std::atomic<bool> running_{false};
  std::thread acceptor_, router_thread_;

  mutable std::mutex state_mutex_;  // router_ and connections_
  Router router_;
  std::map<ConnId, std::shared_ptr<Connection>> connections_;
  ConnId next_id_ = 1;
  std::uint64_t dropped_ = 0;

  std::mutex inbox_mutex_;
  std::condition_variable inbox_cv_;
  std::deque<Inbound> inbox_;
};

}  // namespace harbour::rti
