#pragma once

// Harbour layout loaded from a .geo file plus the rule predicates that run
// over ship footprints: depth lookup, collision, grounding and the one-by-one
// entrance channel. The geometry is immutable once loaded and every
// predicate is a pure function of its arguments.

#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "harbour/common/error.hpp"
#include "harbour/dynamics/model.hpp"
#include "harbour/port/geometry.hpp"

namespace harbour::port {

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class UnknownQuay : public Error {
 public:
  using Error::Error;
};

struct LandArea {
  std::string name;
  Polygon outline;
};

struct Quay {
  std::string name;
  Vec2 start, end;
  double length = 0.0;  // declared, m
  int docking_number = 0;
};

struct Berth {
  std::string name;
  Vec2 position;
  double heading = 0.0;  // rad, approach heading
};

/// Polygon with a uniform charted depth. Zones rank below the channel and
/// the evolution area.
struct DepthZone {
  std::string name;
  Polygon outline;
  double depth = 0.0;
};

struct Channel {
  Vec2 start, end;  // centreline
  double width = 0.0;
  double depth = 0.0;
  Polygon outline;  // rectangle built from the centreline and width
};

struct EvolutionArea {
  Vec2 center;
  double diameter = 0.0;
  double depth = 0.0;
};

struct Bounds {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  bool contains(Vec2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

struct PortGeometry {
  std::string name;
  Bounds bounds;
  double ambient_depth = 11.0;
  std::vector<LandArea> land;
  std::vector<Quay> quays;
  std::vector<Berth> berths;
  std::vector<DepthZone> zones;
  Channel channel;
  EvolutionArea evolution;
  /// Speed-limit area; empty means the whole chart.
  Polygon harbour;

  /// Land → 0, channel, evolution circle, depth zones, then ambient.
  /// Throws OutOfBounds.
  double depth_at(Vec2 p) const;
  bool on_land(Vec2 p) const;
  bool in_channel(Vec2 p) const;
  bool in_evolution_area(Vec2 p) const;
  bool in_harbour(Vec2 p) const;

  /// Declared length; throws UnknownQuay.
  double quay_length(const std::string& name) const;
  const Quay& quay(const std::string& name) const;
  /// Throws ConfigError for unknown names.
  const Berth& berth(const std::string& name) const;

  /// Copy moved by a constant offset.
  PortGeometry translated(Vec2 offset) const;
};

/// Parses the text format documented in docs/geo_format.md. Violated
/// invariants raise ParseError with the line of the offending feature.
PortGeometry parse_geo(std::istream& in, const std::string& source);
PortGeometry load_geo(const std::string& path);

enum class EventKind { collision, grounding, channel_violation, speed_violation, mission_complete };

const char* to_string(EventKind kind);
/// Throws ConfigError.
EventKind parse_event_kind(const std::string& name);

/// A ship-ship collision names both ids in sorted order; a ship-land one
/// names the ship and "land:<area>"; other events name one ship, or every
/// ship in the channel for a violation.
struct RuleEvent {
  EventKind kind = EventKind::collision;
  double time = 0.0;
  std::vector<std::string> ids;
  Vec2 point;
  /// Depth for groundings (m), speed for speed violations (kn), occupants
  /// for channel violations, mission time (s) for completions.
  double value = 0.0;

  bool operator==(const RuleEvent&) const = default;
};

Footprint footprint_of(const std::string& id, const dynamics::ManeuverState& s,
                       const dynamics::ShipParticulars& p);

/// All ship-ship and ship-land contacts, sorted by ids. Serial reference.
std::vector<RuleEvent> check_collision_serial(std::span<const Footprint> ships,
                                              const PortGeometry& geo, double time);
/// Same result with the pair loop spread over OpenMP threads.
std::vector<RuleEvent> check_collision(std::span<const Footprint> ships,
                                       const PortGeometry& geo, double time);

/// Event when the draft exceeds the depth under any footprint corner inside
/// the chart. The reported point is the shallowest such corner.
std::optional<RuleEvent> check_grounding(const Footprint& ship, double draft,
                                         const PortGeometry& geo, double time);

/// Ids of ships whose footprint touches the channel outline, sorted.
std::set<std::string> channel_occupancy(std::span<const Footprint> ships,
                                        const PortGeometry& geo);

/// Turns a level condition into one event per episode: fires on the first
/// update where the condition holds and rearms once it clears.
class EdgeTrigger {
 public:
  bool update(bool condition) {
    const bool fire = condition && !active_;
    active_ = condition;
    return fire;
  }
  bool active() const { return active_; }

 private:
  bool active_ = false;
};

}  // namespace harbour::port
