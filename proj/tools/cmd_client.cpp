// Clients of the bridge control port and the tower query port.

#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

#include "cli_common.hpp"
#include "harbour/bridge/runner.hpp"
#include "harbour/common/units.hpp"
#include "harbour/scenario/scenario.hpp"
#include "harbour/tower/events.hpp"
#include "harbour/tower/runner.hpp"

namespace harbour::cli {

using nlohmann::json;

namespace {

const net::Endpoint kControl{"127.0.0.1", bridge::kDefaultControlPort};
const net::Endpoint kQuery{"127.0.0.1", tower::kDefaultQueryPort};

json read_json_arg(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad JSON argument: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Replies of type ERROR become exit code 1 with the message on stderr.
bool check_reply(const rti::FedMessage& m) {
  if (m.type != rti::MsgType::ERROR) return true;
  spdlog::error("{}: {}", m.payload.value("code", "error"), m.payload.value("message", ""));
  return false;
}

std::string csv_cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

void add_client_commands(CLI::App& app, int& code) {
  // order
  {
    auto* cmd = app.add_subcommand("order", "Send a helm order to a bridge");
    struct Args {
      std::string control, json_text, telegraph, anchor;
      std::optional<double> rudder, shaft_rpm, heading, pitch;
      std::vector<double> thrusters;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--control", a->control, "Bridge control port (default 127.0.0.1:4517)");
    cmd->add_option("--rudder", a->rudder, "Rudder angle, deg; positive to starboard");
    cmd->add_option("--shaft-rpm", a->shaft_rpm, "Shaft rate, RPM");
    cmd->add_option("--telegraph", a->telegraph, "Telegraph detent, e.g. half_ahead");
    cmd->add_option("--pitch", a->pitch, "Pitch lever in [-1, 1]");
    cmd->add_option("--thrusters", a->thrusters, "Thruster levels in [-1, 1]")->delimiter(',');
    cmd->add_option("--heading", a->heading, "Hold this heading, deg");
    cmd->add_option("--anchor", a->anchor, "drop or weigh");
    cmd->add_option("--json", a->json_text, "Order object as JSON instead of the flags above");
    cmd->callback([a, &code] {
      json order = a->json_text.empty() ? json::object() : read_json_arg(a->json_text);
      if (a->rudder) order["rudder_deg"] = *a->rudder;
      if (a->shaft_rpm) order["shaft_rpm"] = *a->shaft_rpm;
      if (!a->telegraph.empty()) order["telegraph"] = a->telegraph;
      if (a->pitch) order["pitch"] = *a->pitch;
      if (!a->thrusters.empty()) order["thrusters"] = a->thrusters;
      if (a->heading) order["heading_deg"] = *a->heading;
      if (!a->anchor.empty()) order["anchor"] = a->anchor;
      scenario::parse_order(order);  // fail early with the field name
      const auto r = request(endpoint_or(a->control, kControl), rti::MsgType::HELM_ORDER, order);
      if (!check_reply(r)) {
        code = kFailure;
        return;
      }
      print_json(r.payload);
      if (!r.payload.value("accepted", false)) code = kFailure;
    });
  }

  // snapshot
  {
    auto* cmd = app.add_subcommand("snapshot", "Print a bridge's conning snapshot");
    struct Args {
      std::string control, format = "json";
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--control", a->control, "Bridge control port (default 127.0.0.1:4517)");
    cmd->add_option("--format", a->format, "json or csv (attribute,value)")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    cmd->callback([a, &code] {
      const auto r = request(endpoint_or(a->control, kControl), rti::MsgType::SNAPSHOT_REQUEST);
      if (!check_reply(r)) {
        code = kFailure;
        return;
      }
      if (a->format == "json") {
        print_json(r.payload);
        return;
      }
      std::cout << "attribute,value\nship," << r.payload["ship"].get<std::string>()
                << "\nsim_time," << json(r.sim_time).dump() << '\n';
      for (const auto& [k, v] : r.payload["conning"].items()) {
        std::cout << k << ",\"" << csv_cell(v) << "\"\n";
      }
    });
  }

  // session
  {
    auto* cmd = app.add_subcommand("session", "Pause, resume or stop a bridge session");
    struct Args {
      std::string action, control;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("action", a->action, "pause, resume or stop")
        ->required()
        ->check(CLI::IsMember({"pause", "resume", "stop"}));
    cmd->add_option("--control", a->control, "Bridge control port (default 127.0.0.1:4517)");
    cmd->callback([a, &code] {
      const auto r = request(endpoint_or(a->control, kControl), rti::MsgType::SESSION_CONTROL,
                             {{"action", a->action}});
      if (!check_reply(r)) {
        code = kFailure;
        return;
      }
      print_json(r.payload);
      if (!r.payload.value("ok", false)) code = kFailure;
    });
  }

  // environment
  {
    auto* cmd = app.add_subcommand(
        "environment", "Change wind, current or waves on one bridge or, via the tower, on all");
    struct Args {
      std::string control, tower, json_text;
      std::optional<double> current_north, current_east, wind_speed, wind_from;
      std::optional<double> wave_amplitude, wave_period, wave_towards;
      bool calm = false;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--control", a->control, "Send to this bridge control port");
    cmd->add_option("--tower", a->tower, "Send through this tower query port to every bridge");
    cmd->add_option("--current-north", a->current_north, "Current towards north, m/s");
    cmd->add_option("--current-east", a->current_east, "Current towards east, m/s");
    cmd->add_option("--wind-speed", a->wind_speed, "Wind speed, m/s");
    cmd->add_option("--wind-from", a->wind_from, "Wind direction it blows from, deg");
    cmd->add_option("--wave-amplitude", a->wave_amplitude, "Wave amplitude, m");
    cmd->add_option("--wave-period", a->wave_period, "Wave period, s");
    cmd->add_option("--wave-towards", a->wave_towards, "Wave propagation direction, deg");
    cmd->add_flag("--calm", a->calm, "Remove the waves");
    cmd->add_option("--json", a->json_text, "Change object as JSON instead of the flags above");
    cmd->callback([a, &code] {
      json change = a->json_text.empty() ? json::object() : read_json_arg(a->json_text);
      if (a->current_north) change["current_north_ms"] = *a->current_north;
      if (a->current_east) change["current_east_ms"] = *a->current_east;
      if (a->wind_speed) change["wind_speed_ms"] = *a->wind_speed;
      if (a->wind_from) change["wind_from_deg"] = *a->wind_from;
      if (a->calm) change["wave"] = nullptr;
      if (a->wave_amplitude || a->wave_period || a->wave_towards) {
        if (!(a->wave_amplitude && a->wave_period && a->wave_towards)) {
          throw ConfigError("waves need --wave-amplitude, --wave-period and --wave-towards");
        }
        change["wave"] = {{"amplitude_m", *a->wave_amplitude},
                          {"period_s", *a->wave_period},
                          {"towards_deg", *a->wave_towards}};
      }
      scenario::parse_environment_change(change, 9.81);
      rti::FedMessage r;
      if (!a->tower.empty()) {
        r = request(endpoint_or(a->tower, kQuery), rti::MsgType::INSTRUCTOR_SET_ENVIRONMENT,
                    {{"environment", change}});
      } else {
        r = request(endpoint_or(a->control, kControl), rti::MsgType::SESSION_CONTROL,
                    {{"action", "set_environment"}, {"environment", change}});
      }
      if (!check_reply(r)) {
        code = kFailure;
        return;
      }
      print_json(r.payload);
      if (!r.payload.value("ok", false)) code = kFailure;
    });
  }

  // autopilot
  {
    auto* cmd = app.add_subcommand("autopilot", "Feed a timed order script to a bridge");
    struct Args {
      std::string script, control;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("script", a->script,
                    "JSON array of {\"t\": s, ...order} or an object with a \"script\" array")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--control", a->control, "Bridge control port (default 127.0.0.1:4517)");
    cmd->callback([a, &code] {
      json doc = read_json_file(a->script);
      const json& steps = doc.is_object() && doc.contains("script") ? doc["script"] : doc;
      const auto script = scenario::parse_script(steps, a->script);
      const auto ep = endpoint_or(a->control, kControl);
      rti::LocalClient client(ep);
      install_signal_handlers();
      std::size_t next = 0;
      while (next < script.size() && !g_interrupted) {
        const auto snap = client.request(rti::MsgType::SNAPSHOT_REQUEST);
        if (!check_reply(snap)) {
          code = kFailure;
          return;
        }
        if (!snap.payload["status"].value("running", false)) {
          spdlog::error("autopilot: session ended with {} of {} orders sent", next, script.size());
          code = kFailure;
          return;
        }
        // Orders take effect at the first step boundary after arrival.
        while (next < script.size() && script[next].time <= snap.sim_time + 1e-9) {
          const auto r = client.request(rti::MsgType::HELM_ORDER,
                                        scenario::order_json(script[next].order));
          if (!check_reply(r)) {
            code = kFailure;
            return;
          }
          const bool ok = r.payload.value("accepted", false);
          spdlog::info("autopilot: t={:.2f} s order {} {}", script[next].time,
                       scenario::order_json(script[next].order).dump(),
                       ok ? "accepted at step " + std::to_string(r.payload.value("step", 0))
                          : "rejected: " + r.payload.value("reason", ""));
          if (!ok) code = kFailure;
          ++next;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
    });
  }

  // picture
  {
    auto* cmd = app.add_subcommand("picture", "Print the tower's traffic picture");
    struct Args {
      std::string query, format = "json";
      bool tracks = false;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--query", a->query, "Tower query port (default 127.0.0.1:4518)");
    cmd->add_flag("--tracks", a->tracks, "Include track histories (json only)");
    cmd->add_option("--format", a->format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    cmd->callback([a, &code] {
      const auto r = request(endpoint_or(a->query, kQuery), rti::MsgType::PICTURE_REQUEST,
                             {{"tracks", a->tracks && a->format == "json"}});
      if (!check_reply(r)) {
        code = kFailure;
        return;
      }
      if (a->format == "json") {
        print_json(r.payload);
        return;
      }
      std::cout << "id,owner,sim_time,x,y,heading_deg,sog_kn,cog_deg,staleness,offline\n";
      for (const auto& s : r.payload["ships"]) {
        std::cout << fmt::format("{},{},{:.2f},{:.2f},{:.2f},{:.1f},{:.2f},{:.1f},{:.3f},{}\n",
                                 s["id"].get<std::string>(), s["owner"].get<std::string>(),
                                 s["sim_time"].get<double>(), s["x"].get<double>(),
                                 s["y"].get<double>(), rad2deg(s["psi"].get<double>()),
                                 ms_to_knots(s["sog"].get<double>()), rad2deg(s["cog"].get<double>()),
                                 s["staleness"].get<double>(), s["offline"].get<bool>());
      }
    });
  }

  // events
  {
    auto* cmd = app.add_subcommand("events", "Print the tower's rule events");
    struct Args {
      std::string query, format = "json";
      std::size_t since = 0;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--query", a->query, "Tower query port (default 127.0.0.1:4518)");
    cmd->add_option("--since", a->since, "Skip the first N events")->capture_default_str();
    cmd->add_option("--format", a->format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    cmd->callback([a, &code] {
      const auto r = request(endpoint_or(a->query, kQuery), rti::MsgType::EVENTS_REQUEST,
                             {{"since", a->since}});
      if (!check_reply(r)) {
        code = kFailure;
        return;
      }
      if (a->format == "json") {
        print_json(r.payload);
        return;
      }
      std::cout << "kind,time,ids,x,y,value\n";
      for (const auto& e : r.payload["events"]) {
        std::string ids;
        for (const auto& id : e["ids"]) ids += (ids.empty() ? "" : ";") + id.get<std::string>();
        std::cout << fmt::format("{},{:.2f},{},{:.2f},{:.2f},{}\n", e["kind"].get<std::string>(),
                                 e["time"].get<double>(), ids, e["x"].get<double>(),
                                 e["y"].get<double>(), e["value"].get<double>());
      }
    });
  }

  // metrics
  {
    auto* cmd = app.add_subcommand("metrics", "Print session metrics, live or from an event log");
    struct Args {
      std::string query, from_log, format = "json";
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("--query", a->query, "Tower query port (default 127.0.0.1:4518)");
    cmd->add_option("--from-log", a->from_log, "Recompute from a tower event log instead")
        ->check(CLI::ExistingFile);
    cmd->add_option("--format", a->format, "json or csv (metric,value)")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    cmd->callback([a, &code] {
      json m;
      if (!a->from_log.empty()) {
        m = tower::to_json(tower::compute_metrics(tower::read_event_log(a->from_log)));
      } else {
        const auto r = request(endpoint_or(a->query, kQuery), rti::MsgType::METRICS_REQUEST);
        if (!check_reply(r)) {
          code = kFailure;
          return;
        }
        m = r.payload;
      }
      if (a->format == "json") {
        print_json(m);
        return;
      }
      std::cout << "metric,value\n";
      for (const auto& [k, v] : m.items()) {
        if (k == "missions") continue;
        std::cout << k << ',' << v.dump() << '\n';
      }
      for (const auto& r : m["missions"]) {
        std::cout << "mission:" << r["ship"].get<std::string>() << ',' << r["time"].dump() << '\n';
      }
    });
  }

  // teleport
  {
    auto* cmd = app.add_subcommand("teleport", "Print a ship's conning view as the tower sees it");
    struct Args {
      std::string ship, query;
    };
    auto a = std::make_shared<Args>();
    cmd->add_option("ship", a->ship, "Ship id")->required();
    cmd->add_option("--query", a->query, "Tower query port (default 127.0.0.1:4518)");
    cmd->callback([a, &code] {
      const auto r = request(endpoint_or(a->query, kQuery), rti::MsgType::TELEPORT_REQUEST,
                             {{"ship", a->ship}});
      if (!check_reply(r)) {
        code = kFailure;
        return;
      }
      json out = r.payload;
      out["sim_time"] = r.sim_time;
      print_json(out);
    });
  }
}

}  // namespace harbour::cli
