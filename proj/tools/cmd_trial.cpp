// trial and replay subcommands.

#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli_common.hpp"
#include "harbour/bridge/order_log.hpp"
#include "harbour/common/hash.hpp"
#include "harbour/common/units.hpp"
#include "harbour/dynamics/ship_config.hpp"
#include "harbour/trials/trials.hpp"

namespace harbour::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// "8", "8kn" or "4.1m/s" -> knots.
double parse_speed(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad speed '" + text + "'");
  }
  const std::string unit = text.substr(used);
  if (unit.empty() || unit == "kn" || unit == "kt") return v;
  if (unit == "m/s" || unit == "ms") return v / kKnot;
  throw ConfigError("bad speed unit in '" + text + "' (use kn or m/s)");
}

// "20/20" -> rudder, switch. A negative rudder starts to port.
std::pair<double, double> parse_pair(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) throw std::invalid_argument("");
    return {std::stod(text.substr(0, slash)), std::stod(text.substr(slash + 1))};
  } catch (const std::exception&) {
    throw ConfigError("bad zigzag pair '" + text + "' (expected e.g. 20/20)");
  }
}

std::string spec_name(const trials::TrialSpec& s) {
  std::ostringstream o;
  o << trials::to_string(s.kind) << '_' << s.approach_speed << "kn";
  if (s.kind == trials::TrialKind::circle) o << '_' << (s.rudder_angle < 0 ? "port" : "stbd") << std::abs(s.rudder_angle);
  if (s.kind == trials::TrialKind::zigzag) o << '_' << std::abs(s.zigzag_rudder) << '-' << s.zigzag_switch;
  return o.str();
}

std::string write_csv(const trials::TrialRecord& rec, const std::string& path) {
  trials::export_record(rec, path);
  std::ostringstream buf;
  trials::write_record_csv(rec, buf);
  return to_hex(fnv1a(buf.str()));
}

void print_metrics(const trials::TrialMetrics& m, const trials::TrialSpec& spec,
                   const std::string& format) {
  if (format == "json") {
    std::cout << json::parse(trials::metrics_json(m, spec)).dump(2) << '\n';
  } else if (format == "csv") {
    std::cout << "metric,value,unit\n";
    std::istringstream rows(trials::format_metrics(m));
    std::string name, value, unit;
    while (rows >> name >> value >> unit) std::cout << name << ',' << value << ',' << unit << '\n';
  } else {
    std::cout << trials::format_metrics(m);
  }
}

}  // namespace

void add_trial_commands(CLI::App& app, int& code) {
  auto* trial = app.add_subcommand("trial", "Run a fast-time maneuvering trial");
  struct Args {
    std::string kind, ship = "kriso", speed = "8kn", pair = "20/20", out, format = "table";
    double rudder = 35.0, dt = 0.1, max_time = 3600.0;
    std::optional<double> shaft_rpm;
    int stride = 1;
  };
  auto a = std::make_shared<Args>();
  trial->add_option("kind", a->kind, "circle, zigzag, stop or battery")
      ->required()
      ->check(CLI::IsMember({"circle", "zigzag", "stop", "battery"}));
  trial->add_option("--ship", a->ship, "Ship config name or path")->capture_default_str();
  trial->add_option("--speed", a->speed, "Approach speed, e.g. 8kn or 4.1m/s")->capture_default_str();
  trial->add_option("--rudder", a->rudder, "Circle rudder angle, deg; negative is port")
      ->capture_default_str();
  trial->add_option("--pair", a->pair, "Zigzag rudder/switch angles, deg; '-10/10' starts to port")
      ->capture_default_str();
  trial->add_option("--shaft-rpm", a->shaft_rpm, "Stop trial shaft order (default: stopped)");
  trial->add_option("--dt", a->dt, "Time step, s")->capture_default_str();
  trial->add_option("--max-time", a->max_time, "Give up after this much simulated time, s")
      ->capture_default_str();
  trial->add_option("--stride", a->stride, "Record every n-th step")->capture_default_str();
  trial->add_option("--out", a->out,
                    "Output prefix (<out>.csv and <out>.metrics.json); a directory for 'battery'");
  trial->add_option("--format", a->format, "Metrics on stdout: table, csv or json")
      ->check(CLI::IsMember({"table", "csv", "json"}))
      ->capture_default_str();

  trial->callback([a, &code] {
    const auto ship = dynamics::load_ship_config(resolve_ship(a->ship));
    const dynamics::Environment env{};

    if (a->kind == "battery") {
      const std::string dir = a->out.empty() ? "battery" : a->out;
      fs::create_directories(dir);
      auto specs = trials::reference_battery();
      for (auto& s : specs) {
        s.dt = a->dt;
        s.record_stride = a->stride;
      }
      const auto results = trials::run_battery(specs, ship, env);
      if (a->format == "csv") std::cout << "trial,status,csv,fnv1a\n";
      for (const auto& r : results) {
        const std::string name = spec_name(r.spec);
        if (!r.error.empty()) {
          code = kTrial;
          if (a->format == "csv") {
            std::cout << name << ",failed,,\n";
          } else {
            std::cout << name << ": FAILED " << r.error << '\n';
          }
          continue;
        }
        const std::string path = (fs::path(dir) / (name + ".csv")).string();
        const std::string hash = write_csv(r.record, path);
        std::ofstream(fs::path(dir) / (name + ".metrics.json"))
            << trials::metrics_json(*r.metrics, r.spec) << '\n';
        if (a->format == "csv") {
          std::cout << name << ",ok," << path << ',' << hash << '\n';
        } else {
          std::cout << name << "  " << path << "  fnv1a " << hash << '\n';
          if (a->format == "table") print_metrics(*r.metrics, r.spec, "table");
        }
      }
      return;
    }

    trials::TrialSpec spec;
    spec.kind = trials::parse_kind(a->kind);
    spec.approach_speed = parse_speed(a->speed);
    spec.rudder_angle = a->rudder;
    std::tie(spec.zigzag_rudder, spec.zigzag_switch) = parse_pair(a->pair);
    if (a->shaft_rpm) spec.shaft_order = rpm_to_rps(*a->shaft_rpm);
    spec.dt = a->dt;
    spec.max_sim_time = a->max_time;
    spec.record_stride = a->stride;
    spec.validate();

    const auto record = trials::run_trial(spec, ship, env);
    const auto metrics = trials::compute_metrics(record, spec);
    const std::string prefix = a->out.empty() ? spec_name(spec) : a->out;
    if (auto parent = fs::path(prefix).parent_path(); !parent.empty()) fs::create_directories(parent);
    const std::string hash = write_csv(record, prefix + ".csv");
    std::ofstream(prefix + ".metrics.json") << trials::metrics_json(metrics, spec) << '\n';
    spdlog::info("{}: {} samples to {}.csv (fnv1a {})", spec_name(spec), record.samples.size(), prefix,
                 hash);
    print_metrics(metrics, spec, a->format);
  });

  auto* rep = app.add_subcommand("replay", "Re-run a recorded bridge session from its order log");
  struct ReplayArgs {
    std::string log, scenario, out;
    int stride = 1;
  };
  auto r = std::make_shared<ReplayArgs>();
  rep->add_option("log", r->log, "Order log written by 'harbour bridge --order-log'")->required();
  rep->add_option("--scenario", r->scenario, "Scenario the session ran")->required();
  rep->add_option("--out", r->out, "Trajectory CSV (default: stdout)");
  rep->add_option("--stride", r->stride, "Write every n-th step")->capture_default_str();
  rep->callback([r] {
    const auto log = bridge::read_order_log(r->log);
    const auto sc = scenario::load_scenario(r->scenario);
    if (log.truncated) spdlog::warn("{}: log is truncated; replaying up to the last complete entry", r->log);
    bridge::ReplayResult res;
    if (r->out.empty()) {
      res = bridge::replay(log, sc, std::cout, r->stride);
    } else {
      std::ofstream out(r->out, std::ios::trunc);
      if (!out) throw IoError("cannot write '" + r->out + "'");
      res = bridge::replay(log, sc, out, r->stride);
    }
    spdlog::info("replayed {} steps of '{}'{}", res.steps, log.header.ship,
                 res.truncated ? " (truncated log)" : "");
  });
}

}  // namespace harbour::cli
