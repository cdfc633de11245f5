#pragma once

// Control tower process core: subscribes to every ShipState, keeps the
// traffic picture, evaluates the port rules, tracks missions and answers
// queries on the local port. One thread owns the picture and the rule
// engine; queries copy under a lock.

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>

#include "harbour/rti/client.hpp"
#include "harbour/rti/service.hpp"
#include "harbour/tower/events.hpp"
#include "harbour/tower/picture.hpp"

namespace harbour::tower {

inline constexpr std::uint16_t kDefaultQueryPort = 4518;

class ShipUnknown : public Error {
 public:
  using Error::Error;
};

struct TowerOptions {
  net::Endpoint rti{"127.0.0.1", rti::kDefaultPort};
  std::string federate_id = "tower";
  std::optional<net::Endpoint> query = net::Endpoint{"127.0.0.1", kDefaultQueryPort};
  std::string event_log;  // path, empty for none
  double eval_period = 0.1;  // s of wall time between rule evaluations
  std::size_t history = 600;
  double decimation = 1.0;
  /// Teleport views older than this (s) are flagged as degraded.
  double degraded_after = 2.0;
};

/// Live conning view of one ship as last published by its bridge.
struct TeleportView {
  std::string ship;
  double sim_time = 0.0;
  nlohmann::json conning;
  double staleness = 0.0;
  /// Bridge offline or silent: the values are the last ones received.
  bool degraded = false;
};

class TowerRunner {
 public:
  /// Joins the federation; throws net::NetError or rti::JoinRejected, and
  /// net::BindError for the query port.
  TowerRunner(const scenario::Scenario& sc, TowerOptions options);
  ~TowerRunner();
  TowerRunner(const TowerRunner&) = delete;
  TowerRunner& operator=(const TowerRunner&) = delete;

  void start();
  void stop();
  /// Returns when stopped or the federation is lost.
  void wait();

  nlohmann::json picture(bool with_tracks) const;
  std::vector<TowerEvent> events() const;
  SessionMetrics metrics() const;
  /// Throws ShipUnknown.
  TeleportView teleport(const std::string& ship) const;
  /// Sends an EnvironmentControl interaction to every bridge. Throws
  /// ScenarioError for a malformed change.
  bool set_environment(const nlohmann::json& change);

  std::uint16_t query_port() const { return query_ ? query_->port() : 0; }
  bool federation_lost() const { return rti_->lost(); }
  /// Query-protocol request handler; thread-safe.
  std::vector<rti::FedMessage> handle_query(const rti::FedMessage& m);

 private:
  void run();
  void handle(const rti::FedMessage& m);
  void evaluate();

  TowerOptions opt_;
  double gravity_;
  std::unique_ptr<rti::RtiClient> rti_;
  std::unique_ptr<rti::LocalService> query_;
  std::unique_ptr<EventLogWriter> log_;

  mutable std::mutex mutex_;
  TrafficPicture picture_;
  RuleEngine engine_;
  std::vector<TowerEvent> events_;

  std::atomic<bool> stopping_{false};
  std::mutex done_mutex_;
  std::condition_variable done_cv_;
  bool finished_ = false;
  std::thread thread_;
};

}  // namespace harbour::tower
