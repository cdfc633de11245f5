#pragma once

// Tower events, the rule engine that raises them, session metrics and the
// persisted event log. Metrics are a pure function of the event list, so
// the live values and those recomputed from the log agree exactly.

#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "harbour/port/port.hpp"
#include "harbour/scenario/scenario.hpp"
#include "harbour/tower/picture.hpp"
#include "json.hpp"

namespace harbour::tower {

using port::EventKind;
using TowerEvent = port::RuleEvent;

nlohmann::json to_json(const TowerEvent& e);
/// Throws ConfigError.
TowerEvent event_from_json(const nlohmann::json& j);

/// Evaluates the port predicates over the current picture and emits each
/// violation once per episode.
class RuleEngine {
 public:
  explicit RuleEngine(const scenario::Scenario& sc);
  std::vector<TowerEvent> evaluate(std::span<const ShipView> ships);

 private:
  bool edge(const std::string& key, bool active, std::map<std::string, bool>& seen);

  port::PortGeometry port_;
  scenario::PortRules rules_;
  struct Goal {
    port::Vec2 berth;
    scenario::Mission mission;
  };
  std::map<std::string, Goal> missions_;
  std::map<std::string, port::EdgeTrigger> triggers_;
  std::map<std::string, bool> completed_;
};

struct MissionResult {
  std::string ship;
  double time = 0.0;  // s from scenario start

  bool operator==(const MissionResult&) const = default;
};

struct SessionMetrics {
  std::vector<MissionResult> missions;
  /// Mean and population standard deviation of the mission times; zero
  /// without missions.
  double mission_mean = 0.0;
  double mission_std = 0.0;
  std::size_t collisions = 0;
  std::size_t groundings = 0;
  std::size_t channel_violations = 0;
  std::size_t speed_violations = 0;
  /// Channel plus speed violations.
  std::size_t wrong_manoeuvres() const { return channel_violations + speed_violations; }

  bool operator==(const SessionMetrics&) const = default;
};

SessionMetrics compute_metrics(std::span<const TowerEvent> events);
nlohmann::json to_json(const SessionMetrics& m);

/// One JSON event per line, appended and flushed as events occur.
class EventLogWriter {
 public:
  /// Starts a new file. Throws IoError.
  explicit EventLogWriter(const std::string& path);
  void append(const TowerEvent& e);

 private:
  std::ofstream out_;
  std::string path_;
};

/// Throws IoError or ParseError (line numbered). A partial final line from
/// an interrupted write is skipped.
std::vector<TowerEvent> read_event_log(const std::string& path);

}  // namespace harbour::tower
