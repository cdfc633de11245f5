#include "harbour/tower/events.hpp"

#include <algorithm>
#include <cmath>

namespace harbour::tower {

using nlohmann::json;

json to_json(const TowerEvent& e) {
  return {{"kind", port::to_string(e.kind)}, {"time", e.time}, {"ids", e.ids},
          {"x", e.point.x}, {"y", e.point.y}, {"value", e.value}};
}

TowerEvent event_from_json(const json& j) {
  try {
    TowerEvent e;
    e.kind = port::parse_event_kind(j.at("kind").get<std::string>());
    e.time = j.at("time").get<double>();
    e.ids = j.at("ids").get<std::vector<std::string>>();
    e.point = {j.at("x").get<double>(), j.at("y").get<double>()};
    e.value = j.at("value").get<double>();
    return e;
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("bad event: ") + ex.what());
  }
}

RuleEngine::RuleEngine(const scenario::Scenario& sc) : port_(sc.port), rules_(sc.rules) {
  for (const auto& s : sc.ships) {
    if (s.mission) missions_[s.id] = {sc.port.berth(s.mission->berth).position, *s.mission};
  }
}

bool RuleEngine::edge(const std::string& key, bool active, std::map<std::string, bool>& seen) {
  if (active) seen[key] = true;
  return triggers_[key].update(active);
}

std::vector<TowerEvent> RuleEngine::evaluate(std::span<const ShipView> ships) {
  std::vector<TowerEvent> out;
  std::map<std::string, bool> seen;
  std::map<std::string, const ShipView*> by_id;
  std::vector<port::Footprint> fps;
  fps.reserve(ships.size());
  for (const auto& s : ships) {
    by_id[s.id] = &s;
    fps.push_back({s.id, {s.x, s.y}, s.psi, s.length, s.beam});
  }
  auto latest = [&](const std::vector<std::string>& ids) {
    double t = 0.0;
    for (const auto& id : ids) {
      if (auto it = by_id.find(id); it != by_id.end()) t = std::max(t, it->second->time);
    }
    return t;
  };

  for (auto& e : port::check_collision(fps, port_, 0.0)) {
    std::string key = "collision";
    for (const auto& id : e.ids) key += "|" + id;
    if (edge(key, true, seen)) {
      e.time = latest(e.ids);
      out.push_back(std::move(e));
    }
  }

  for (std::size_t i = 0; i < fps.size(); ++i) {
    auto g = port::check_grounding(fps[i], ships[i].draft, port_, ships[i].time);
    if (edge("grounding|" + ships[i].id, g.has_value(), seen)) out.push_back(std::move(*g));
  }

  if (rules_.channel_one_by_one) {
    const auto occupants = port::channel_occupancy(fps, port_);
    const bool crowded = occupants.size() > 1;
    if (edge("channel", crowded, seen)) {
      TowerEvent e{EventKind::channel_violation, 0.0, {occupants.begin(), occupants.end()}, {}, 0.0};
      for (const auto& id : e.ids) {
        e.point = e.point + port::Vec2{by_id[id]->x, by_id[id]->y};
      }
      e.point = (1.0 / static_cast<double>(e.ids.size())) * e.point;
      e.value = static_cast<double>(e.ids.size());
      e.time = latest(e.ids);
      out.push_back(std::move(e));
    }
  }

  for (const auto& s : ships) {
    const bool fast = s.sog > rules_.speed_limit && port_.in_harbour({s.x, s.y});
    if (edge("speed|" + s.id, fast, seen)) {
      out.push_back({EventKind::speed_violation, s.time, {s.id}, {s.x, s.y}, ms_to_knots(s.sog)});
    }
  }

  for (const auto& s : ships) {
    const auto m = missions_.find(s.id);
    if (m == missions_.end() || completed_[s.id]) continue;
    const auto& goal = m->second;
    const double dist = std::hypot(s.x - goal.berth.x, s.y - goal.berth.y);
    if (dist <= goal.mission.tolerance && s.sog < goal.mission.max_sog) {
      completed_[s.id] = true;
      out.push_back({EventKind::mission_complete, s.time, {s.id}, {s.x, s.y}, s.time});
    }
  }

  // Everything not seen this round has ended its episode.
  for (auto& [key, trigger] : triggers_) {
    if (!seen.count(key)) trigger.update(false);
  }
  return out;
}

SessionMetrics compute_metrics(std::span<const TowerEvent> events) {
  SessionMetrics m;
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::collision: ++m.collisions; break;
      case EventKind::grounding: ++m.groundings; break;
      case EventKind::channel_violation: ++m.channel_violations; break;
      case EventKind::speed_violation: ++m.speed_violations; break;
      case EventKind::mission_complete:
        m.missions.push_back({e.ids.empty() ? "" : e.ids.front(), e.value});
        break;
    }
  }
  if (!m.missions.empty()) {
    const double n = static_cast<double>(m.missions.size());
    double sum = 0.0;
    for (const auto& r : m.missions) sum += r.time;
    m.mission_mean = sum / n;
    double sq = 0.0;
    for (const auto& r : m.missions) sq += (r.time - m.mission_mean) * (r.time - m.mission_mean);
    m.mission_std = std::sqrt(sq / n);
  }
  return m;
}

json to_json(const SessionMetrics& m) {
  json missions = json::array();
  for (const auto& r : m.missions) missions.push_back({{"ship", r.ship}, {"time", r.time}});
  return {{"missions", missions},
          {"mission_count", m.missions.size()},
          {"mission_time_mean", m.mission_mean},
          {"mission_time_std", m.mission_std},
          {"collisions", m.collisions},
          {"groundings", m.groundings},
          {"channel_violations", m.channel_violations},
          {"speed_violations", m.speed_violations},
          {"wrong_manoeuvres", m.wrong_manoeuvres()}};
}

EventLogWriter::EventLogWriter(const std::string& path) : out_(path, std::ios::trunc), path_(path) {
  if (!out_) throw IoError("cannot write event log '" + path + "'");
}

void EventLogWriter::append(const TowerEvent& e) {
  out_ << to_json(e).dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("write to '" + path_ + "' failed");
}

std::vector<TowerEvent> read_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open event log '" + path + "'");
  std::vector<TowerEvent> out;
  std::string text;
  int lineno = 0;
  std::optional<std::pair<int, std::string>> bad;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (bad) throw ParseError(path, bad->first, bad->second);
    try {
      out.push_back(event_from_json(json::parse(text)));
    } catch (const std::exception& e) {
      bad = {lineno, e.what()};
    }
  }
  return out;
}

}  // namespace harbour::tower
