#pragma once

// Federation routing state, free of any I/O: the server feeds it decoded
// messages tagged with a connection id and delivers what it returns.
//
// Payloads understood here:
//   JOIN        {"protocol": 1}
//   JOIN_ACK    {"heartbeat_interval": s, "objects": [{instance, class, owner,
//                time, stale, attributes}, ...]} sorted by instance
//   PUBLISH     {"class": C, "instance": I, "attributes": [names]}
//   SUBSCRIBE   {"class": C}
//   UPDATE      {"instance": I, "attributes": {name: value}}
//   INTERACTION {"class": C, "to": [ids] (optional), "parameters": {...}}
//   RESIGN      {} from a federate; {"federate": id, "forced": bool} from the RTI
//   ERROR       {"code": ..., "message": ...}

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "harbour/rti/protocol.hpp"

namespace harbour::rti {

using ConnId = std::uint64_t;


struct Outgoing {
  ConnId to = 0;
  FedMessage msg;
};

struct ObjectRecord {
  std::string object_class;
  std::string owner;
  std::vector<std::string> schema;
  nlohmann::json attributes = nlohmann::json::object();
  double sim_time = 0.0;
  bool stale = false;
};

class Router {
 public:
  explicit Router(double heartbeat_interval = 1.0) : interval_(heartbeat_interval) {}

  /// Processes one message received on `from` at server time `now` (s).
  std::vector<Outgoing> handle(ConnId from, const FedMessage& msg, double now);
  /// The connection closed without RESIGN: treated as a forced resign.
  std::vector<Outgoing> disconnect(ConnId conn);
  /// Forced RESIGN for every federate silent for three heartbeat intervals.
  std::vector<Outgoing> check_liveness(double now);

  double heartbeat_interval() const { return interval_; }
  bool joined(const std::string& federate) const { return federates_.count(federate) > 0; }
  std::vector<std::string> federates() const;
  const std::map<std::string, ObjectRecord>& objects() const { return objects_; }
  /// Federates removed by liveness since construction, in order.
  const std::vector<std::string>& forced_resigns() const { return forced_; }

  /// Snapshot payload a joining federate receives.
  nlohmann::json snapshot() const;

 private:
  struct Federate {
    ConnId conn = 0;
    double last_heard = 0.0;
    std::uint64_t last_seq = 0;
    bool any_seq = false;
    std::set<std::string> subscriptions;
  };

  FedMessage reply(MsgType type, nlohmann::json payload);
  Outgoing error(ConnId to, const std::string& code, const std::string& message);
  std::vector<Outgoing> remove(const std::string& id, bool forced);

  double interval_;
  std::uint64_t seq_ = 0;
  std::map<std::string, Federate> federates_;
  std::map<ConnId, std::string> by_conn_;
  std::map<std::string, ObjectRecord> objects_;
  std::vector<std::string> forced_;
};

/// Per-subscriber bounded outbound queue. When full, a new UPDATE replaces
/// the oldest queued UPDATE for the same instance and attribute set (the
/// replacement goes to the back, so per-publisher order is kept); failing
/// that the oldest queued UPDATE is dropped. Anything else that does not fit
/// makes push() return false and the connection must be closed.
class OutboundQueue {
 public:
  explicit OutboundQueue(std::size_t bound = 256) : bound_(bound) {}

  bool push(FedMessage m);
  bool empty() const { return q_.empty(); }
  std::size_t size() const { return q_.size(); }
  FedMessage pop();
  std::uint64_t dropped() const { return dropped_; }

 private:
  std::size_t bound_;
  std::deque<FedMessage> q_;
  std::uint64_t dropped_ = 0;
};

}  // namespace harbour::rti
