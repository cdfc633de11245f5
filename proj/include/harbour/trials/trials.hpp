#pragma once

// Fast-time maneuvering trials: circle, zigzag and stop tests run from a
// trimmed straight approach, their time-series records and summary metrics.

#include <optional>
#include <string>
#include <vector>

#include "harbour/common/error.hpp"
#include "harbour/dynamics/model.hpp"

namespace harbour::trials {

class TrialFailure : public Error {
 public:
  using Error::Error;
};

/// No shaft rate within the engine limit holds the approach speed.
class TrimFailure : public TrialFailure {
 public:
  using TrialFailure::TrialFailure;
};

/// Completion criteria not met before max_sim_time.
class Timeout : public TrialFailure {
 public:
  using TrialFailure::TrialFailure;
};

class IncompleteManeuver : public TrialFailure {
 public:
  using TrialFailure::TrialFailure;
};

enum class TrialKind { circle, zigzag, stop };

const char* to_string(TrialKind kind);
/// Throws ConfigError on anything but "circle", "zigzag" or "stop".
TrialKind parse_kind(const std::string& name);

struct TrialSpec {
  TrialKind kind = TrialKind::circle;
  double approach_speed = 8.0;  // kn
  /// Circle rudder, deg. Negative is port.
  double rudder_angle = 35.0;
  /// Zigzag rudder and heading switch angles, deg. The sign of zigzag_rudder
  /// picks the first side (negative = port first); zigzag_switch is > 0.
  double zigzag_rudder = 20.0;
  double zigzag_switch = 20.0;
  /// Stop: shaft order in rev/s applied at t = 0; empty means stopped (0).
  std::optional<double> shaft_order;
  double dt = 0.1;  // s
  double max_sim_time = 3600.0;  // s
  int record_stride = 1;  // keep every n-th step

  /// Throws ConfigError.
  void validate() const;
};

struct TrialSample {
  double t = 0.0;
  double x = 0.0, y = 0.0, psi = 0.0;
  double u = 0.0, v = 0.0, r = 0.0;
  double delta = 0.0, n = 0.0;
  double beta = 0.0;   // drift angle
  double speed = 0.0;  // through-water U

  bool operator==(const TrialSample&) const = default;
};

struct TrialRecord {
  std::vector<TrialSample> samples;
  double trim_shaft_rate = 0.0;  // rev/s found for the approach
};

struct CircleMetrics {
  double advance = 0.0;             // m, along the approach track at 90 deg
  double transfer = 0.0;            // m, across it at 90 deg
  double tactical_diameter = 0.0;   // m, across it at 180 deg
  double steady_radius = 0.0;       // m, circle fitted over the final 360 deg
  double steady_speed = 0.0;        // m/s, mean U over the final 360 deg
  double steady_yaw_rate = 0.0;     // rad/s, mean |r| over the final 360 deg
  double time_to_90 = 0.0;          // s
  double time_to_180 = 0.0;         // s
};

struct ZigzagMetrics {
  /// Overshoot after each rudder reversal, deg, in order. Always >= 0; the
  /// side alternates starting with the first execute.
  std::vector<double> overshoots;
  double first_overshoot = 0.0;
  double second_overshoot = 0.0;
  double initial_turning_time = 0.0;  // s from start to the first reversal
};

struct StopMetrics {
  double track_reach = 0.0;   // m travelled along the path
  double head_reach = 0.0;    // m along the approach heading
  double lateral_deviation = 0.0;  // m across it
  double stopping_time = 0.0; // s until U < 0.1 kn
};

struct TrialMetrics {
  TrialKind kind = TrialKind::circle;
  std::optional<CircleMetrics> circle;
  std::optional<ZigzagMetrics> zigzag;
  std::optional<StopMetrics> stop;
};

/// Trims the approach by bisection, then runs the maneuver. Circle: rudder
/// to the trial angle and held through 540 deg of heading change. Zigzag: the
/// rudder reverses whenever the heading deviation reaches the switch angle;
/// ends at the heading peak after the fourth reversal. Stop: shaft order at
/// t = 0, ends when U < 0.1 kn.
TrialRecord run_trial(const TrialSpec& spec, const dynamics::ShipConfig& ship,
                      const dynamics::Environment& env);

/// Throws IncompleteManeuver when the record does not cover what the metric
/// needs (360 deg of turn, a zigzag reversal, or reaching the stop speed).
TrialMetrics compute_metrics(const TrialRecord& record, const TrialSpec& spec);

/// CSV with a version comment line and a header row; 9 significant digits.
void write_record_csv(const TrialRecord& record, std::ostream& out);
void export_record(const TrialRecord& record, const std::string& path);
TrialRecord import_record(const std::string& path);
TrialRecord read_record_csv(std::istream& in, const std::string& source);

/// One row per metric: name, value, unit.
std::string format_metrics(const TrialMetrics& m);
std::string metrics_json(const TrialMetrics& m, const TrialSpec& spec);

/// Result of one job in a battery. `error` is empty on success.
struct BatteryResult {
  TrialSpec spec;
  TrialRecord record;
  std::optional<TrialMetrics> metrics;
  std::string error;
};

/// Independent trials run one after another.
std::vector<BatteryResult> run_battery_serial(const std::vector<TrialSpec>& specs,
                                              const dynamics::ShipConfig& ship,
                                              const dynamics::Environment& env);

/// The same jobs spread over OpenMP threads; results are identical to the
/// serial runner and in the same order.
std::vector<BatteryResult> run_battery(const std::vector<TrialSpec>& specs,
                                       const dynamics::ShipConfig& ship,
                                       const dynamics::Environment& env);

/// The four standard validation runs: circle 8 kn 35 deg port,
/// circle 10 kn 35 deg starboard, zigzag 20/20 at 5 kn (port first), zigzag
/// 10/10 at 5 kn.
std::vector<TrialSpec> reference_battery();

/// Kasa algebraic circle fit. Throws IncompleteManeuver for fewer than 3
/// points or collinear data.
struct CircleFit {
  double cx = 0.0, cy = 0.0, radius = 0.0;
};
CircleFit fit_circle(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace harbour::trials
