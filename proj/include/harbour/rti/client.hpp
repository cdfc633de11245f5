#pragma once

// Federate side of the federation: join, publish/subscribe, updates,
// interactions and automatic heartbeats. Sending is thread-safe; received
// messages are queued in arrival order for a single consumer.

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "harbour/net/socket.hpp"
#include "harbour/rti/protocol.hpp"

namespace harbour::rti {

/// JOIN answered with ERROR (duplicate id, protocol mismatch, ...).
class JoinRejected : public Error {
 public:
  JoinRejected(std::string code, const std::string& what) : Error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Environment variable holding the default RTI endpoint ("host:port").
inline constexpr const char* kEndpointEnv = "HARBOUR_RTI";

/// Endpoint from HARBOUR_RTI, else 127.0.0.1:4516.
net::Endpoint default_endpoint();

class RtiClient {
 public:
  /// Connects and joins. Throws net::NetError when the server is not
  /// reachable and JoinRejected when it refuses the id.
  static std::unique_ptr<RtiClient> join(const net::Endpoint& ep, const std::string& federate_id,
                                         std::chrono::milliseconds timeout =
                                             std::chrono::milliseconds(2000));
  ~RtiClient();

  const std::string& id() const { return id_; }
  /// JOIN_ACK payload: heartbeat interval and the late-joiner snapshot.
  const nlohmann::json& join_snapshot() const { return snapshot_; }

  // Each send returns false once the federation is lost.
  bool publish(const std::string& object_class, const std::string& instance,
               const std::vector<std::string>& attributes);
  bool subscribe(const std::string& object_class);
  bool update(const std::string& instance, double sim_time, const nlohmann::json& attributes);
  bool interaction(const std::string& interaction_class, double sim_time,
                   const nlohmann::json& parameters,
                   const std::optional<std::vector<std::string>>& to = std::nullopt);
  bool send(MsgType type, double sim_time, nlohmann::json payload);

  /// Next received message, waiting up to `timeout`.
  std::optional<FedMessage> poll(std::chrono::milliseconds timeout);

  /// Sends RESIGN and closes. Idempotent.
  void resign();
  /// JOIN again on the same connection after a forced resign; the sequence
  /// numbers restart. Throws JoinRejected.
  void rejoin(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

  /// Connection closed or the RTI resigned us.
  bool lost() const { return lost_; }
  bool forced_out() const { return forced_out_; }
  /// Tests use this to simulate a hung federate.
  void set_heartbeats(bool enabled) { heartbeats_ = enabled; }

 private:
  RtiClient() = default;
  void read_loop();
  void heartbeat_loop();
  FedMessage await_join_reply(std::chrono::milliseconds timeout);

  std::string id_;
  net::Socket socket_;
  nlohmann::json snapshot_;
  double heartbeat_interval_ = 1.0;

  std::mutex send_mutex_;
  std::uint64_t seq_ = 0;

  std::mutex inbox_mutex_;
  std::condition_variable inbox_cv_;
  std::deque<FedMessage> inbox_;

  std::atomic<bool> lost_{false}, forced_out_{false}, heartbeats_{true}, closing_{false};
  std::mutex hb_mutex_;
  std::condition_variable hb_cv_;
  std::thread reader_, heart_;
};

}  // namespace harbour::rti
