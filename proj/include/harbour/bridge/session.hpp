#pragma once

// One ship's simulation: maneuvering model, sea-keeping motions, operator
// setpoints and the conning readout. Purely deterministic; the real-time
// loop, networking and logging live in BridgeRunner.

#include <cstdint>
#include <optional>
#include <string>

#include "harbour/dynamics/model.hpp"
#include "harbour/scenario/scenario.hpp"
#include "harbour/seakeeping/seakeeping.hpp"
#include "json.hpp"

namespace harbour::bridge {

inline constexpr double kDefaultDt = 0.05;
/// Anchor may only be dropped below this ground speed.
inline constexpr double kAnchorMaxSog = 0.5 * kKnot;

class OrderRejected : public Error {
 public:
  using Error::Error;
};

/// Everything the conning display shows, taken after one completed step.
struct ConningSnapshot {
  std::string ship;
  std::uint64_t step = 0;
  double sim_time = 0.0;
  dynamics::ManeuverState state;
  double rudder_ordered = 0.0;  // rad
  double shaft_ordered = 0.0;   // rev/s
  std::array<double, dynamics::kMaxThrusters> thrusters_ordered{};
  std::optional<scenario::Telegraph> telegraph;
  std::optional<double> heading_hold;
  std::optional<dynamics::AnchorHold> anchor;
  double sog = 0.0, cog = 0.0;  // cog in [0, 2 pi)
  double drift = 0.0;
  seakeeping::SeakeepingState motions;
  /// False while the ship outruns the waves; motions then decay freely.
  bool wave_forcing = true;
  dynamics::Environment environment;
  std::optional<double> depth;             // charted depth, empty outside the chart
  std::optional<double> depth_under_keel;  // depth - draft
  double length = 0.0, beam = 0.0, draft = 0.0;

  bool operator==(const ConningSnapshot&) const = default;
};

/// Attribute map published as ShipState; also the SNAPSHOT reply body.
nlohmann::json to_json(const ConningSnapshot& s);

/// Attribute names of the ShipState object class.
const std::vector<std::string>& ship_state_attributes();

class ShipSession {
 public:
  /// Throws ScenarioError for an unknown ship.
  ShipSession(const scenario::Scenario& sc, const std::string& ship_id, double dt = kDefaultDt);

  /// Stores the new setpoints; they act from the next step. All fields are
  /// checked before any is applied. Throws OrderRejected.
  void apply(const scenario::HelmOrder& order);
  void set_environment(const scenario::EnvironmentChange& change);

  void step();

  std::uint64_t steps() const { return steps_; }
  double sim_time() const { return static_cast<double>(steps_) * dt_; }
  double dt() const { return dt_; }
  const dynamics::ManeuverState& state() const { return state_; }
  const seakeeping::SeakeepingState& motions() const { return motions_; }
  const scenario::ShipEntry& ship() const { return entry_; }
  ConningSnapshot snapshot() const;

 private:
  dynamics::Controls controls() const;

  scenario::ShipEntry entry_;
  port::PortGeometry port_;
  scenario::TelegraphTable telegraph_table_;
  double dt_;
  dynamics::Environment env_;
  std::optional<seakeeping::WaveState> wave_;
  seakeeping::HullForm hull_;

  std::uint64_t steps_ = 0;
  dynamics::ManeuverState state_;
  seakeeping::SeakeepingState motions_;
  bool wave_forcing_ = true;

  double rudder_cmd_ = 0.0;
  double shaft_base_ = 0.0;  // before the pitch lever
  double pitch_ = 1.0;
  std::optional<scenario::Telegraph> telegraph_;
  std::array<double, dynamics::kMaxThrusters> thrusters_cmd_{};
  std::optional<dynamics::AnchorHold> anchor_;
  std::optional<double> heading_hold_;
};

}  // namespace harbour::bridge
