#pragma once

// Real-time bridge process core. One simulation thread owns the
// ShipSession; the control port and the federation feed it through a
// command queue and read immutable snapshots back.

#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "harbour/bridge/order_log.hpp"
#include "harbour/bridge/session.hpp"
#include "harbour/net/socket.hpp"
#include "harbour/rti/client.hpp"
#include "harbour/rti/service.hpp"

namespace harbour::bridge {

inline constexpr std::uint16_t kDefaultControlPort = 4517;
using rti::kEnvironmentClass;
using rti::kShipStateClass;

struct BridgeOptions {
  std::string ship_id;
  double dt = kDefaultDt;
  /// Simulated seconds per wall second; 0 runs unpaced.
  double time_scale = 1.0;
  double publish_rate = 10.0;  // Hz of simulated time
  /// Consecutive unpaced steps allowed before the pacing debt is dropped.
  int max_catchup = 10;
  std::optional<net::Endpoint> rti;  // empty: standalone
  std::string federate_id;           // default "bridge-<ship>"
  std::optional<net::Endpoint> control = net::Endpoint{"127.0.0.1", kDefaultControlPort};
  std::string order_log;   // path, empty for none
  std::string trajectory;  // CSV path, empty for none
  int trajectory_stride = 1;
  std::optional<double> duration;  // stop after this much simulated time
  bool start_paused = false;
};

struct OrderResult {
  bool accepted = false;
  std::uint64_t step = 0;  // step at which it takes effect
  std::string reason;
};

struct BridgeStatus {
  bool running = false;
  bool paused = false;
  bool federated = false;
  /// Joined once and then lost the federation; running standalone.
  bool federation_lost = false;
  std::uint64_t publishes = 0;
  std::uint64_t debt_drops = 0;
};

class BridgeRunner {
 public:
  /// Binds the control port (net::BindError) and joins the federation
  /// (rti::JoinRejected propagates; an unreachable RTI means standalone).
  BridgeRunner(const scenario::Scenario& sc, BridgeOptions options);
  ~BridgeRunner();
  BridgeRunner(const BridgeRunner&) = delete;
  BridgeRunner& operator=(const BridgeRunner&) = delete;

  void start();
  /// Ends the session: the order log gets its end marker and RESIGN is sent.
  void stop();
  /// Blocks until the duration elapses or stop() is called.
  void wait();

  /// Queued for the next step boundary; blocks until the simulation
  /// thread has applied or rejected it.
  OrderResult submit(const scenario::HelmOrder& order);
  /// Throws ScenarioError for a malformed change.
  OrderResult submit_environment(const nlohmann::json& change);
  void pause(bool paused);

  std::shared_ptr<const ConningSnapshot> snapshot() const;
  BridgeStatus status() const;
  std::uint16_t control_port() const { return control_ ? control_->port() : 0; }
  const BridgeOptions& options() const { return opt_; }
  /// Control-protocol request handler, shared by the control port and the
  /// browser gateway. Thread-safe.
  std::vector<rti::FedMessage> handle_control(const rti::FedMessage& m);

 private:
  struct Command {
    enum Kind { helm, env, pause, resume, stop } kind;
    scenario::HelmOrder order;
    nlohmann::json environment;
    std::promise<OrderResult> done;
  };

  OrderResult post(std::unique_ptr<Command> cmd);
  void run();
  bool drain(bool& stop_requested);
  void apply_script();
  void publish();
  void poll_federation();
  void finish();

  double gravity_;
  BridgeOptions opt_;
  ShipSession session_;
  std::size_t script_next_ = 0;
  std::uint64_t publish_every_ = 2;

  std::unique_ptr<rti::RtiClient> rti_;
  std::unique_ptr<rti::LocalService> control_;
  std::unique_ptr<OrderLogWriter> log_;
  std::unique_ptr<std::ofstream> traj_file_;
  std::unique_ptr<TrajectoryWriter> traj_;

  mutable std::mutex cmd_mutex_;
  std::condition_variable cmd_cv_;
  std::deque<std::unique_ptr<Command>> commands_;
  bool accepting_ = true;

  mutable std::mutex snap_mutex_;
  std::shared_ptr<const ConningSnapshot> snapshot_;
  BridgeStatus status_;

  std::mutex done_mutex_;
  std::condition_variable done_cv_;
  bool finished_ = false;
  std::thread thread_;
};

}  // namespace harbour::bridge
