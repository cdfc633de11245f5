#include <algorithm>
#include <limits>

#include "harbour/port/port.hpp"

namespace harbour::port {

namespace {

void sort_events(std::vector<RuleEvent>& ev) {
  std::sort(ev.begin(), ev.end(),
            [](const RuleEvent& a, const RuleEvent& b) { return a.ids < b.ids; });
}

std::optional<RuleEvent> ship_pair(const Footprint& a, const Footprint& b, double time) {
  // Canonical order keeps the contact point independent of argument order.
  if (b.id < a.id) return ship_pair(b, a, time);
  const auto p = contact_point(a, b);
  if (!p) return std::nullopt;
  return RuleEvent{EventKind::collision, time, {a.id, b.id}, *p, 0.0};
}

std::optional<RuleEvent> ship_land(const Footprint& f, const LandArea& land, double time) {
  const auto p = contact_point(f, land.outline);
  if (!p) return std::nullopt;
  return RuleEvent{EventKind::collision, time, {f.id, "land:" + land.name}, *p, 0.0};
}

}  // namespace

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::collision: return "collision";
    case EventKind::grounding: return "grounding";
    case EventKind::channel_violation: return "channel_violation";
    case EventKind::speed_violation: return "speed_violation";
    case EventKind::mission_complete: return "mission_complete";
  }
  return "?";
}

EventKind parse_event_kind(const std::string& name) {
  for (auto k : {EventKind::collision, EventKind::grounding, EventKind::channel_violation,
                 EventKind::speed_violation, EventKind::mission_complete}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown event kind '" + name + "'");
}

Footprint footprint_of(const std::string& id, const dynamics::ManeuverState& s,
                       const dynamics::ShipParticulars& p) {
  return {id, {s.x, s.y}, s.psi, p.length_pp, p.breadth};
}

std::vector<RuleEvent> check_collision_serial(std::span<const Footprint> ships,
                                              const PortGeometry& geo, double time) {
  std::vector<RuleEvent> out;
  for (std::size_t i = 0; i < ships.size(); ++i) {
    for (std::size_t j = i + 1; j < ships.size(); ++j) {
      if (auto e = ship_pair(ships[i], ships[j], time)) out.push_back(std::move(*e));
    }
    for (const auto& land : geo.land) {
      if (auto e = ship_land(ships[i], land, time)) out.push_back(std::move(*e));
    }
  }
  sort_events(out);
  return out;
}

std::vector<RuleEvent> check_collision(std::span<const Footprint> ships, const PortGeometry& geo,
                                       double time) {
  // Rows shrink with i, hence the dynamic schedule. Each thread keeps its own
  // hits; the final sort makes the order independent of the thread count.
  const long n = static_cast<long>(ships.size());
  std::vector<RuleEvent> out;
#pragma omp parallel
  {
    std::vector<RuleEvent> mine;
#pragma omp for schedule(dynamic, 4) nowait
    for (long i = 0; i < n; ++i) {
      for (long j = i + 1; j < n; ++j) {
        if (auto e = ship_pair(ships[i], ships[j], time)) mine.push_back(std::move(*e));
      }
      for (const auto& land : geo.land) {
        if (auto e = ship_land(ships[i], land, time)) mine.push_back(std::move(*e));
      }
    }
#pragma omp critical
    out.insert(out.end(), std::make_move_iterator(mine.begin()), std::make_move_iterator(mine.end()));
  }
  sort_events(out);
  return out;
}

std::optional<RuleEvent> check_grounding(const Footprint& ship, double draft,
                                         const PortGeometry& geo, double time) {
  double shallowest = std::numeric_limits<double>::infinity();
  Vec2 where;
  for (Vec2 c : corners(ship)) {
    if (!geo.bounds.contains(c)) continue;
    const double d = geo.depth_at(c);
    if (d < shallowest) {
      shallowest = d;
      where = c;
    }
  }
  if (!(draft > shallowest)) return std::nullopt;
  return RuleEvent{EventKind::grounding, time, {ship.id}, where, shallowest};
}

std::set<std::string> channel_occupancy(std::span<const Footprint> ships,
                                        const PortGeometry& geo) {
  std::set<std::string> ids;
  for (const auto& f : ships) {
    if (footprint_hits_polygon(f, geo.channel.outline)) ids.insert(f.id);
  }
  return ids;
}

}  // namespace harbour::port
