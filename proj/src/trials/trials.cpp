#include "harbour/trials/trials.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include "json.hpp"

namespace harbour::trials {

namespace {

using dynamics::ManeuverState;

constexpr double kStopSpeed = 0.1 * kKnot;

TrialSample sample_of(double t, const ManeuverState& s) {
  return {t,      s.x,     s.y, s.psi, s.u, s.v, s.r, s.delta, s.n, dynamics::drift_angle(s),
          dynamics::speed_magnitude(s)};
}

// Heading change accumulated sample by sample, so a full turn is 2 pi.
std::vector<double> unwrapped_turn(const std::vector<TrialSample>& samples) {
  std::vector<double> turn(samples.size(), 0.0);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    turn[i] = turn[i - 1] + wrap_pi(samples[i].psi - samples[i - 1].psi);
  }
  return turn;
}

struct TrackPoint {
  double t, along, cross;
};

// Position at the first crossing of |turn| = target, linearly interpolated,
// in the frame of the approach track.
std::optional<TrackPoint> crossing(const std::vector<TrialSample>& s,
                                   const std::vector<double>& turn, double target) {
  const double c = std::cos(s[0].psi);
  const double sn = std::sin(s[0].psi);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double a = std::abs(turn[i - 1]);
    const double b = std::abs(turn[i]);
    if (a < target && b >= target) {
      const double f = (target - a) / (b - a);
      const double x = s[i - 1].x + f * (s[i].x - s[i - 1].x) - s[0].x;
      const double y = s[i - 1].y + f * (s[i].y - s[i - 1].y) - s[0].y;
      return TrackPoint{s[i - 1].t + f * (s[i].t - s[i - 1].t), c * x + sn * y, -sn * x + c * y};
    }
  }
  return std::nullopt;
}

CircleMetrics circle_metrics(const TrialRecord& rec) {
  const auto& s = rec.samples;
  if (s.size() < 3) throw IncompleteManeuver("circle record too short");
  const auto turn = unwrapped_turn(s);
  const double total = std::abs(turn.back());
  if (total < kTwoPi) {
    throw IncompleteManeuver("circle record turns only " + std::to_string(rad2deg(total)) +
                             " deg, 360 needed");
  }
  CircleMetrics m;
  const auto q = crossing(s, turn, kPi / 2);
  const auto h = crossing(s, turn, kPi);
  m.advance = q->along;
  m.transfer = std::abs(q->cross);
  m.time_to_90 = q->t;
  m.tactical_diameter = std::abs(h->cross);
  m.time_to_180 = h->t;

  std::vector<double> xs, ys;
  double speed = 0.0;
  double rate = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::abs(turn[i]) >= total - kTwoPi) {
      xs.push_back(s[i].x);
      ys.push_back(s[i].y);
      speed += s[i].speed;
      rate += std::abs(s[i].r);
    }
  }
  m.steady_radius = fit_circle(xs, ys).radius;
  m.steady_speed = speed / static_cast<double>(xs.size());
  m.steady_yaw_rate = rate / static_cast<double>(xs.size());
  return m;
}

ZigzagMetrics zigzag_metrics(const TrialRecord& rec, const TrialSpec& spec) {
  const auto& s = rec.samples;
  const auto turn = unwrapped_turn(s);
  const double sw = deg2rad(spec.zigzag_switch);
  double side = spec.zigzag_rudder >= 0.0 ? 1.0 : -1.0;

  std::vector<std::size_t> reversals;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (side * turn[i] >= sw) {
      reversals.push_back(i);
      side = -side;
    }
  }
  if (reversals.empty()) throw IncompleteManeuver("zigzag record has no rudder reversal");

  ZigzagMetrics m;
  {
    // Interpolated time the heading first reached the switch angle.
    const std::size_t i = reversals.front();
    const double first = spec.zigzag_rudder >= 0.0 ? 1.0 : -1.0;
    const double a = first * turn[i - 1];
    const double b = first * turn[i];
    const double f = b > a ? (sw - a) / (b - a) : 0.0;
    m.initial_turning_time = s[i - 1].t + f * (s[i].t - s[i - 1].t);
  }
  double old_side = spec.zigzag_rudder >= 0.0 ? 1.0 : -1.0;
  for (std::size_t k = 0; k < reversals.size(); ++k) {
    const std::size_t end = k + 1 < reversals.size() ? reversals[k + 1] : s.size();
    double peak = -1e300;
    for (std::size_t i = reversals[k]; i < end; ++i) peak = std::max(peak, old_side * turn[i]);
    m.overshoots.push_back(std::max(0.0, rad2deg(peak - sw)));
    old_side = -old_side;
  }
  m.first_overshoot = m.overshoots[0];
  m.second_overshoot = m.overshoots.size() > 1 ? m.overshoots[1] : 0.0;
  return m;
}

StopMetrics stop_metrics(const TrialRecord& rec) {
  const auto& s = rec.samples;
  if (s.empty()) throw IncompleteManeuver("empty stop record");
  const double c = std::cos(s[0].psi);
  const double sn = std::sin(s[0].psi);
  StopMetrics m;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) m.track_reach += std::hypot(s[i].x - s[i - 1].x, s[i].y - s[i - 1].y);
    if (s[i].speed < kStopSpeed) {
      const double x = s[i].x - s[0].x;
      const double y = s[i].y - s[0].y;
      m.head_reach = c * x + sn * y;
      m.lateral_deviation = -sn * x + c * y;
      m.stopping_time = s[i].t;
      return m;
    }
  }
  throw IncompleteManeuver("stop record never falls below 0.1 kn");
}

BatteryResult run_one(const TrialSpec& spec, const dynamics::ShipConfig& ship,
                      const dynamics::Environment& env) {
  BatteryResult r;
  r.spec = spec;
  try {
    r.record = run_trial(spec, ship, env);
    r.metrics = compute_metrics(r.record, spec);
  } catch (const Error& e) {
    r.error = e.what();
  }
  return r;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

constexpr const char* kCsvVersion = "# harbour trial record v1";
constexpr const char* kCsvHeader = "t_s,x_m,y_m,psi_rad,u_ms,v_ms,r_rads,delta_rad,n_rps,beta_rad,U_ms";

}  // namespace

const char* to_string(TrialKind kind) {
  switch (kind) {
    case TrialKind::circle:
      return "circle";
    case TrialKind::zigzag:
      return "zigzag";
    case TrialKind::stop:
      return "stop";
  }
  return "?";
}

TrialKind parse_kind(const std::string& name) {
  if (name == "circle") return TrialKind::circle;
  if (name == "zigzag") return TrialKind::zigzag;
  if (name == "stop") return TrialKind::stop;
  throw ConfigError("unknown trial kind '" + name + "'");
}

void TrialSpec::validate() const {
  if (!(approach_speed > 0.0)) throw ConfigError("approach speed must be positive");
  if (!(std::abs(rudder_angle) <= 35.0)) throw ConfigError("rudder angle must be within 35 deg");
  if (!(std::abs(zigzag_rudder) <= 35.0 && zigzag_rudder != 0.0)) {
    throw ConfigError("zigzag rudder must be non-zero and within 35 deg");
  }
  if (!(zigzag_switch > 0.0 && zigzag_switch < 180.0)) {
    throw ConfigError("zigzag switch angle must be in (0, 180) deg");
  }
  if (!(dt > 0.0 && dt <= 1.0)) throw ConfigError("trial dt must be in (0, 1] s");
  if (!(max_sim_time > 0.0)) throw ConfigError("max_sim_time must be positive");
  if (record_stride < 1) throw ConfigError("record stride must be >= 1");
  if (shaft_order && !std::isfinite(*shaft_order)) throw ConfigError("shaft order must be finite");
}

TrialRecord run_trial(const TrialSpec& spec, const dynamics::ShipConfig& ship,
                      const dynamics::Environment& env) {
  spec.validate();
  const double speed = knots_to_ms(spec.approach_speed);
  const auto trim = dynamics::trim_shaft_rate(speed, ship, env);
  if (!trim) {
    throw TrimFailure("no shaft rate up to " + std::to_string(rps_to_rpm(ship.engine.max_rate)) +
                      " rpm reaches " + std::to_string(spec.approach_speed) + " kn");
  }

  TrialRecord rec;
  rec.trim_shaft_rate = *trim;
  ManeuverState s;
  s.u = speed;
  s.n = *trim;
  dynamics::Controls ctl;
  ctl.shaft = *trim;

  double side = 1.0;
  int reversals = 0;
  const double sw = deg2rad(spec.zigzag_switch);
  switch (spec.kind) {
    case TrialKind::circle:
      ctl.rudder = deg2rad(spec.rudder_angle);
      break;
    case TrialKind::zigzag:
      side = spec.zigzag_rudder >= 0.0 ? 1.0 : -1.0;
      ctl.rudder = deg2rad(spec.zigzag_rudder);
      break;
    case TrialKind::stop:
      ctl.shaft = spec.shaft_order.value_or(0.0);
      if (std::abs(ctl.shaft) > ship.engine.max_rate) {
        throw ConfigError("stop shaft order exceeds the engine limit");
      }
      break;
  }

  rec.samples.push_back(sample_of(0.0, s));
  const auto max_steps = static_cast<long>(std::ceil(spec.max_sim_time / spec.dt - 1e-9));
  double turn = 0.0;
  for (long i = 1;; ++i) {
    const double prev_psi = s.psi;
    s = dynamics::step(s, ctl, ship, env, spec.dt);
    turn += wrap_pi(s.psi - prev_psi);
    const double t = static_cast<double>(i) * spec.dt;

    bool done = false;
    switch (spec.kind) {
      case TrialKind::circle:
        done = std::abs(turn) >= 3.0 * kPi;
        break;
      case TrialKind::zigzag:
        if (reversals >= 4) {
          // Heading has peaked once it turns toward the current rudder side.
          done = side * s.r >= 0.0;
        } else if (side * turn >= sw) {
          side = -side;
          ctl.rudder = side * deg2rad(std::abs(spec.zigzag_rudder));
          ++reversals;
        }
        break;
      case TrialKind::stop:
        done = dynamics::speed_magnitude(s) < kStopSpeed;
        break;
    }
    if (i % spec.record_stride == 0 || done) rec.samples.push_back(sample_of(t, s));
    if (done) break;
    if (i >= max_steps) {
      throw Timeout(std::string(to_string(spec.kind)) + " trial incomplete after " +
                    std::to_string(spec.max_sim_time) + " s");
    }
  }
  return rec;
}

TrialMetrics compute_metrics(const TrialRecord& record, const TrialSpec& spec) {
  TrialMetrics m;
  m.kind = spec.kind;
  switch (spec.kind) {
    case TrialKind::circle:
      m.circle = circle_metrics(record);
      break;
    case TrialKind::zigzag:
      m.zigzag = zigzag_metrics(record, spec);
      break;
    case TrialKind::stop:
      m.stop = stop_metrics(record);
      break;
  }
  return m;
}

CircleFit fit_circle(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = std::min(xs.size(), ys.size());
  if (n < 3) throw IncompleteManeuver("circle fit needs at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  // x^2 + y^2 + D x + E y + F = 0 in coordinates centred on the mean.
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xs[i] - mx;
    const double y = ys[i] - my;
    const auto row = static_cast<Eigen::Index>(i);
    a(row, 0) = x;
    a(row, 1) = y;
    a(row, 2) = 1.0;
    b(row) = -(x * x + y * y);
  }
  const auto qr = a.colPivHouseholderQr();
  if (qr.rank() < 3) throw IncompleteManeuver("circle fit on collinear points");
  const Eigen::Vector3d sol = qr.solve(b);
  CircleFit fit;
  fit.cx = mx - 0.5 * sol(0);
  fit.cy = my - 0.5 * sol(1);
  const double r2 = 0.25 * (sol(0) * sol(0) + sol(1) * sol(1)) - sol(2);
  if (!(r2 > 0.0)) throw IncompleteManeuver("circle fit degenerate");
  fit.radius = std::sqrt(r2);
  return fit;
}

void write_record_csv(const TrialRecord& record, std::ostream& out) {
  out << kCsvVersion << '\n';
  out << "# trim_shaft_rate_rps " << fmt9(record.trim_shaft_rate) << '\n';
  out << kCsvHeader << '\n';
  for (const auto& s : record.samples) {
    out << fmt9(s.t) << ',' << fmt9(s.x) << ',' << fmt9(s.y) << ',' << fmt9(s.psi) << ','
        << fmt9(s.u) << ',' << fmt9(s.v) << ',' << fmt9(s.r) << ',' << fmt9(s.delta) << ','
        << fmt9(s.n) << ',' << fmt9(s.beta) << ',' << fmt9(s.speed) << '\n';
  }
}

void export_record(const TrialRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_record_csv(record, out);
  if (!out) throw IoError("write to '" + path + "' failed");
}

TrialRecord read_record_csv(std::istream& in, const std::string& source) {
  TrialRecord rec;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# trim_shaft_rate_rps ";
      if (line.rfind(key, 0) == 0) rec.trim_shaft_rate = std::stod(line.substr(key.size()));
      continue;
    }
    if (!header) {
      if (line != kCsvHeader) throw ParseError(source, line_no, "unexpected CSV header");
      header = true;
      continue;
    }
    double v[11];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 11; ++k) {
      const auto [ptr, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc()) throw ParseError(source, line_no, "bad number in column " + std::to_string(k + 1));
      p = ptr;
      if (k < 10) {
        if (p == end || *p != ',') throw ParseError(source, line_no, "expected 11 columns");
        ++p;
      }
    }
    if (p != end) throw ParseError(source, line_no, "trailing data");
    rec.samples.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]});
  }
  if (!header) throw ParseError(source, line_no, "missing CSV header");
  return rec;
}

TrialRecord import_record(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_record_csv(in, path);
}

std::string format_metrics(const TrialMetrics& m) {
  std::ostringstream out;
  auto row = [&](const char* name, double value, const char* unit) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-22s %14.4f %s\n", name, value, unit);
    out << buf;
  };
  if (m.circle) {
    row("advance", m.circle->advance, "m");
    row("transfer", m.circle->transfer, "m");
    row("tactical_diameter", m.circle->tactical_diameter, "m");
    row("steady_radius", m.circle->steady_radius, "m");
    row("steady_speed", m.circle->steady_speed, "m/s");
    row("steady_yaw_rate", m.circle->steady_yaw_rate, "rad/s");
    row("time_to_90", m.circle->time_to_90, "s");
    row("time_to_180", m.circle->time_to_180, "s");
  }
  if (m.zigzag) {
    row("initial_turning_time", m.zigzag->initial_turning_time, "s");
    for (std::size_t i = 0; i < m.zigzag->overshoots.size(); ++i) {
      const std::string name = "overshoot_" + std::to_string(i + 1);
      row(name.c_str(), m.zigzag->overshoots[i], "deg");
    }
  }
  if (m.stop) {
    row("track_reach", m.stop->track_reach, "m");
    row("head_reach", m.stop->head_reach, "m");
    row("lateral_deviation", m.stop->lateral_deviation, "m");
    row("stopping_time", m.stop->stopping_time, "s");
  }
  return out.str();
}

std::string metrics_json(const TrialMetrics& m, const TrialSpec& spec) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(spec.kind);
  j["approach_speed_kn"] = spec.approach_speed;
  j["dt_s"] = spec.dt;
  if (m.circle) {
    j["rudder_deg"] = spec.rudder_angle;
    j["advance_m"] = m.circle->advance;
    j["transfer_m"] = m.circle->transfer;
    j["tactical_diameter_m"] = m.circle->tactical_diameter;
    j["steady_radius_m"] = m.circle->steady_radius;
    j["steady_speed_ms"] = m.circle->steady_speed;
    j["steady_yaw_rate_rads"] = m.circle->steady_yaw_rate;
    j["time_to_90_s"] = m.circle->time_to_90;
    j["time_to_180_s"] = m.circle->time_to_180;
  }
  if (m.zigzag) {
    j["rudder_deg"] = spec.zigzag_rudder;
    j["switch_deg"] = spec.zigzag_switch;
    j["initial_turning_time_s"] = m.zigzag->initial_turning_time;
    j["overshoots_deg"] = m.zigzag->overshoots;
  }
  if (m.stop) {
    j["shaft_order_rps"] = spec.shaft_order.value_or(0.0);
    j["track_reach_m"] = m.stop->track_reach;
    j["head_reach_m"] = m.stop->head_reach;
    j["lateral_deviation_m"] = m.stop->lateral_deviation;
    j["stopping_time_s"] = m.stop->stopping_time;
  }
  return j.dump(2);
}

std::vector<BatteryResult> run_battery_serial(const std::vector<TrialSpec>& specs,
                                              const dynamics::ShipConfig& ship,
                                              const dynamics::Environment& env) {
  std::vector<BatteryResult> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) out.push_back(run_one(spec, ship, env));
  return out;
}

std::vector<BatteryResult> run_battery(const std::vector<TrialSpec>& specs,
                                       const dynamics::ShipConfig& ship,
                                       const dynamics::Environment& env) {
  std::vector<BatteryResult> out(specs.size());
  const auto n = static_cast<long>(specs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = run_one(specs[static_cast<std::size_t>(i)], ship, env);
  }
  return out;
}

std::vector<TrialSpec> reference_battery() {
  TrialSpec port;
  port.kind = TrialKind::circle;
  port.approach_speed = 8.0;
  port.rudder_angle = -35.0;

  TrialSpec starboard = port;
  starboard.approach_speed = 10.0;
  starboard.rudder_angle = 35.0;

  TrialSpec z20;
  z20.kind = TrialKind::zigzag;
  z20.approach_speed = 5.0;
  z20.zigzag_rudder = -20.0;
  z20.zigzag_switch = 20.0;

  TrialSpec z10 = z20;
  z10.zigzag_rudder = 10.0;
  z10.zigzag_switch = 10.0;
  return {port, starboard, z20, z10};
}

}  // namespace harbour::trials
