// Long-running processes: serve, bridge, tower.

#include <spdlog/spdlog.h>

#include "cli_common.hpp"
#include "harbour/bridge/runner.hpp"
#include "harbour/rti/client.hpp"
#include "harbour/rti/server.hpp"
#include "harbour/tower/runner.hpp"
#ifdef HARBOUR_WITH_GATEWAY
#include "harbour/gateway/gateway.hpp"
#endif

namespace harbour::cli {

namespace {

struct UiArgs {
  std::string static_dir;
  bool no_gateway = false;
};

void add_ui_options(CLI::App* cmd, UiArgs& ui) {
#ifdef HARBOUR_WITH_GATEWAY
  cmd->add_option("--with-ui", ui.static_dir, "Serve the browser console from this directory")
      ->check(CLI::ExistingDirectory);
  cmd->add_flag("--no-gateway", ui.no_gateway, "Do not open the browser socket on local port + 1000");
#else
  (void)cmd;
  (void)ui;
#endif
}

#ifdef HARBOUR_WITH_GATEWAY
std::unique_ptr<gateway::Gateway> open_gateway(const UiArgs& ui, const net::Endpoint& local,
                                               std::uint16_t bound_port, rti::MsgType push,
                                               rti::Handler handler, const std::string& name) {
  if (ui.no_gateway) return nullptr;
  gateway::GatewayOptions g;
  g.endpoint = {local.host, gateway::gateway_port(bound_port)};
  g.static_dir = ui.static_dir;
  g.push_request = push;
  g.name = name;
  auto gw = std::make_unique<gateway::Gateway>(g, std::move(handler));
  gw->start();
  return gw;
}
#endif

std::string rti_help() {
  return std::string("RTI endpoint host:port (default ") + rti::kEndpointEnv + " or 127.0.0.1:" +
         std::to_string(rti::kDefaultPort) + ")";
}

}  // namespace

void add_federation_commands(CLI::App& app, int& code) {
  // serve
  {
    auto* cmd = app.add_subcommand("serve", "Run the RTI router");
    struct Args {
      std::string listen;
      double heartbeat = 1.0, poll = 0.05;
      std::size_t queue = 256;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--listen", a->listen, rti_help());
    cmd->add_option("--heartbeat", a->heartbeat, "Heartbeat interval announced to federates, s")
        ->capture_default_str();
    cmd->add_option("--poll", a->poll, "Liveness check period, s")->capture_default_str();
    cmd->add_option("--queue", a->queue, "Outbound messages buffered per federate")
        ->capture_default_str();
    cmd->callback([a] {
      rti::ServerOptions o;
      o.endpoint = endpoint_or(a->listen, rti::default_endpoint());
      o.heartbeat_interval = a->heartbeat;
      o.poll_interval = a->poll;
      o.queue_bound = a->queue;
      install_signal_handlers();
      rti::RtiServer server(o);
      server.start();
      wait_until([] { return false; });
      spdlog::info("rti: shutting down");
      server.stop();
    });
  }

  // bridge
  {
    auto* cmd = app.add_subcommand("bridge", "Run the bridge simulator for one ship");
    struct Args {
      std::string scenario, ship, rti, control, federate_id, order_log, trajectory;
      bool standalone = false, paused = false, no_control = false;
      double time_scale = 1.0, publish_rate = 10.0;
      std::optional<double> duration;
      int stride = 1;
      UiArgs ui;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("scenario", a->scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--ship", a->ship, "Ship id (default: the scenario's only or first piloted ship)");
    cmd->add_option("--rti", a->rti, rti_help());
    cmd->add_flag("--standalone", a->standalone, "Do not join a federation");
    cmd->add_option("--federate-id", a->federate_id, "Federate id (default bridge-<ship>)");
    cmd->add_option("--control", a->control, "Control port host:port (default 127.0.0.1:4517)");
    cmd->add_flag("--no-control", a->no_control, "Do not open the control port");
    cmd->add_option("--time-scale", a->time_scale, "Simulated seconds per wall second; 0 is unpaced")
        ->capture_default_str();
    cmd->add_option("--publish-rate", a->publish_rate, "ShipState updates per simulated second")
        ->capture_default_str();
    cmd->add_option("--duration", a->duration, "Stop after this much simulated time, s");
    cmd->add_option("--order-log", a->order_log, "Record the session for replay");
    cmd->add_option("--trajectory", a->trajectory, "Write the trajectory CSV");
    cmd->add_option("--stride", a->stride, "Trajectory CSV row every n-th step")->capture_default_str();
    cmd->add_flag("--paused", a->paused, "Start paused; resume with 'harbour session resume'");
    add_ui_options(cmd, a->ui);
    cmd->callback([a] {
      const auto sc = scenario::load_scenario(a->scenario);
      bridge::BridgeOptions o;
      o.ship_id = a->ship;
      if (o.ship_id.empty()) {
        if (sc.ships.empty()) throw ConfigError(a->scenario + ": no ships");
        o.ship_id = sc.ships.front().id;
        for (const auto& s : sc.ships) {
          if (s.role == scenario::Role::piloted) {
            o.ship_id = s.id;
            break;
          }
        }
      }
      o.time_scale = a->time_scale;
      o.publish_rate = a->publish_rate;
      if (!a->standalone) o.rti = endpoint_or(a->rti, rti::default_endpoint());
      o.federate_id = a->federate_id;
      if (a->no_control) {
        o.control.reset();
      } else {
        o.control = endpoint_or(a->control, *o.control);
      }
      o.order_log = a->order_log;
      o.trajectory = a->trajectory;
      o.trajectory_stride = a->stride;
      o.duration = a->duration;
      o.start_paused = a->paused;

      install_signal_handlers();
      bridge::BridgeRunner runner(sc, o);
#ifdef HARBOUR_WITH_GATEWAY
      std::unique_ptr<gateway::Gateway> gw;
      if (o.control) {
        gw = open_gateway(a->ui, *o.control, runner.control_port(), rti::MsgType::SNAPSHOT_REQUEST,
                          [&runner](const rti::FedMessage& m) { return runner.handle_control(m); },
                          "bridge-gateway");
      }
#endif
      runner.start();
      spdlog::info("bridge: '{}' running{}", o.ship_id,
                   o.control ? " with control on port " + std::to_string(runner.control_port()) : "");
      wait_until([&] { return !runner.status().running; });
#ifdef HARBOUR_WITH_GATEWAY
      if (gw) gw->stop();
#endif
      runner.stop();
      const auto snap = runner.snapshot();
      spdlog::info("bridge: stopped at step {} (t = {:.2f} s)", snap->step, snap->sim_time);
    });
  }

  // tower
  {
    auto* cmd = app.add_subcommand("tower", "Run the control tower");
    struct Args {
      std::string scenario, rti, query, federate_id = "tower", event_log;
      double degraded_after = 2.0;
      std::size_t history = 600;
      UiArgs ui;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("scenario", a->scenario, "Scenario file (port, rules, missions)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--rti", a->rti, rti_help());
    cmd->add_option("--federate-id", a->federate_id, "Federate id")->capture_default_str();
    cmd->add_option("--query", a->query, "Query port host:port (default 127.0.0.1:4518)");
    cmd->add_option("--event-log", a->event_log, "Append events to this file (truncated at start)");
    cmd->add_option("--history", a->history, "Track points kept per ship")->capture_default_str();
    cmd->add_option("--degraded-after", a->degraded_after,
                    "Teleport views older than this are flagged degraded, s")
        ->capture_default_str();
    add_ui_options(cmd, a->ui);
    cmd->callback([a, &code] {
      const auto sc = scenario::load_scenario(a->scenario);
      tower::TowerOptions o;
      o.rti = endpoint_or(a->rti, rti::default_endpoint());
      o.federate_id = a->federate_id;
      o.query = endpoint_or(a->query, *o.query);
      o.event_log = a->event_log;
      o.history = a->history;
      o.degraded_after = a->degraded_after;

      install_signal_handlers();
      tower::TowerRunner runner(sc, o);
#ifdef HARBOUR_WITH_GATEWAY
      auto gw = open_gateway(a->ui, *o.query, runner.query_port(), rti::MsgType::PICTURE_REQUEST,
                             [&runner](const rti::FedMessage& m) { return runner.handle_query(m); },
                             "tower-gateway");
#endif
      runner.start();
      wait_until([&] { return runner.federation_lost(); });
      if (runner.federation_lost() && !g_interrupted) code = kFailure;
#ifdef HARBOUR_WITH_GATEWAY
      if (gw) gw->stop();
#endif
      runner.stop();
      const auto m = runner.metrics();
      spdlog::info("tower: {} missions, {} collisions, {} groundings, {} wrong manoeuvres",
                   m.missions.size(), m.collisions, m.groundings, m.wrong_manoeuvres());
    });
  }
  (void)code;
}

}  // namespace harbour::cli
