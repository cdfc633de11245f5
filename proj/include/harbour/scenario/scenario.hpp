#pragma once

// Training scenario: harbour layout, ships with their initial states and
// roles, environment, port rules, missions and scripted helm orders. Loaded
// from JSON (docs/scenario_format.md); relative paths resolve against the
// scenario file's directory.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "harbour/common/error.hpp"
#include "harbour/common/units.hpp"
#include "harbour/dynamics/model.hpp"
#include "json.hpp"
#include "harbour/port/port.hpp"
#include "harbour/seakeeping/seakeeping.hpp"

namespace harbour::scenario {

class ScenarioError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

enum class Telegraph {
  full_astern,
  half_astern,
  slow_astern,
  dead_slow_astern,
  stop,
  dead_slow_ahead,
  slow_ahead,
  half_ahead,
  full_ahead,
};

const char* to_string(Telegraph t);
/// Accepts "full_ahead", "full-ahead" or "full ahead". Throws ConfigError.
Telegraph parse_telegraph(const std::string& name);

/// Detent positions as fractions of the rated shaft rate. Astern detents
/// mirror the ahead ones scaled so that full astern is -astern_limit.
struct TelegraphTable {
  double dead_slow = 0.2, slow = 0.4, half = 0.7, full = 1.0;
  double astern_limit = 0.7;

  double fraction(Telegraph t) const;
  /// Shaft order in rev/s for the ship's rated rate.
  double shaft_rate(Telegraph t, const dynamics::EngineModel& engine) const;
};

enum class AnchorAction { drop, weigh };

/// One helm order. Unset fields leave the previous setpoint in place.
struct HelmOrder {
  std::optional<double> rudder;     // rad, positive to starboard
  std::optional<double> shaft;      // rev/s
  std::optional<Telegraph> telegraph;
  /// Pitch lever, [-1, 1]; scales the ordered shaft rate.
  std::optional<double> pitch;
  std::optional<std::array<double, dynamics::kMaxThrusters>> thrusters;
  std::optional<AnchorAction> anchor;
  /// Autopilot heading to hold, rad. Cleared by any explicit rudder order.
  std::optional<double> heading_hold;

  bool operator==(const HelmOrder&) const = default;
};

struct ScriptStep {
  double time = 0.0;  // s of simulation time
  HelmOrder order;
};

/// PD heading controller: rudder = kp * heading error - kd * yaw rate.
struct HeadingGains {
  double kp = 4.0;    // rad rudder per rad of error
  double kd = 200.0;  // rad rudder per rad/s of yaw rate
};

struct AutopilotScript {
  std::vector<ScriptStep> steps;  // non-decreasing times
  HeadingGains gains;
};

/// Goal for a piloted ship: be within `tolerance` of the berth with ground
/// speed below `max_sog`.
struct Mission {
  std::string berth;
  double tolerance = 100.0;  // m
  double max_sog = 0.5 * kKnot;  // m/s
};

enum class Role { piloted, scripted };

struct ShipEntry {
  std::string id;
  std::string config_path;  // resolved
  dynamics::ShipConfig config;
  dynamics::ManeuverState initial;
  /// Initial shaft order in rev/s; empty means trim for the initial speed.
  std::optional<double> initial_shaft;
  Role role = Role::piloted;
  std::optional<Mission> mission;
  AutopilotScript script;
};

struct PortRules {
  bool channel_one_by_one = true;
  double speed_limit = 8.0 * kKnot;  // m/s, inside the harbour outline
};

struct Scenario {
  std::string name;
  std::string source;     // file it was loaded from
  std::string port_path;  // resolved
  port::PortGeometry port;
  std::vector<ShipEntry> ships;
  dynamics::Environment environment;
  std::optional<seakeeping::WaveState> wave;
  PortRules rules;
  TelegraphTable telegraph;

  /// Throws ScenarioError.
  const ShipEntry& ship(const std::string& id) const;
};

/// Runtime change of the weather and sea state, sent by the instructor.
/// Unset fields keep their current value; `set_wave` with an empty `wave`
/// calms the sea.
struct EnvironmentChange {
  std::optional<double> current_x, current_y;  // m/s
  std::optional<double> wind_speed;            // m/s
  std::optional<double> wind_direction;        // rad, coming from
  bool set_wave = false;
  std::optional<seakeeping::WaveState> wave;

  bool empty() const;
  void apply(dynamics::Environment& env, std::optional<seakeeping::WaveState>& sea) const;
};

/// Keys as in the scenario "environment" block (without water_density);
/// "wave": null calms the sea. Throws ScenarioError.
EnvironmentChange parse_environment_change(const nlohmann::json& j, double gravity);

/// Throws ScenarioError for structural problems and violated invariants
/// (duplicate ids, a ship starting aground or on land, unknown berths);
/// errors from the referenced files propagate with their own types.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text, const std::string& source,
                        const std::string& base_dir);

/// Parses one order object, e.g. {"rudder_deg": -20, "telegraph": "half_ahead"}.
/// Shared by scenario scripts and the control protocols.
/// Throws ConfigError naming the offending field.
HelmOrder parse_order(const nlohmann::json& j);
nlohmann::json order_json(const HelmOrder& order);

/// Array of {"t": s, ...order fields}; `where` prefixes error paths.
/// Throws ScenarioError.
std::vector<ScriptStep> parse_script(const nlohmann::json& steps, const std::string& where);

}  // namespace harbour::scenario
