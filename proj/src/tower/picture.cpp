#include "harbour/tower/picture.hpp"

#include <cmath>

namespace harbour::tower {

using nlohmann::json;

namespace {

bool read_number(const json& a, const char* key, double& out) {
  const auto it = a.find(key);
  if (it == a.end() || !it->is_number()) return false;
  out = it->get<double>();
  return std::isfinite(out);
}

}  // namespace

TrafficPicture::TrafficPicture(std::size_t history, double decimation)
    : history_(history), decimation_(decimation) {}

TrafficPicture::Ingest TrafficPicture::ingest(const std::string& instance, const std::string& owner,
                                              double sim_time, const json& attributes,
                                              Clock::time_point now) {
  if (!attributes.is_object()) return Ingest::invalid;
  const auto it = records_.find(instance);
  const bool exists = it != records_.end();
  if (exists && !it->second.offline && sim_time < it->second.sim_time) return Ingest::older_ignored;

  json merged = exists ? it->second.attributes : json::object();
  merged.update(attributes);
  ShipView v;
  v.id = instance;
  v.time = sim_time;
  double cog = 0.0;
  if (!(read_number(merged, "x", v.x) && read_number(merged, "y", v.y) &&
        read_number(merged, "psi", v.psi) && read_number(merged, "sog", v.sog) &&
        read_number(merged, "cog", cog) && read_number(merged, "length", v.length) &&
        read_number(merged, "beam", v.beam) && read_number(merged, "draft", v.draft))) {
    return Ingest::invalid;
  }

  TrafficRecord& r = records_[instance];
  r.id = instance;
  r.owner = owner;
  // A rejoined bridge restarts its clock; its old track no longer fits.
  if (r.offline && sim_time < r.sim_time) r.track.clear();
  r.sim_time = sim_time;
  r.attributes = std::move(merged);
  r.view = v;
  r.cog = cog;
  r.received = now;
  r.offline = false;
  if (r.track.empty() || sim_time - r.track.back().t >= decimation_) {
    r.track.push_back({sim_time, v.x, v.y});
    while (r.track.size() > history_) r.track.pop_front();
  }
  return exists ? Ingest::updated : Ingest::created;
}

void TrafficPicture::set_offline(const std::string& owner) {
  for (auto& [id, r] : records_) {
    if (r.owner == owner) r.offline = true;
  }
}

const TrafficRecord* TrafficPicture::find(const std::string& id) const {
  const auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<ShipView> TrafficPicture::views() const {
  std::vector<ShipView> out;
  for (const auto& [id, r] : records_) {
    if (!r.offline) out.push_back(r.view);
  }
  return out;
}

json TrafficPicture::to_json(Clock::time_point now, bool with_tracks) const {
  json ships = json::array();
  for (const auto& [id, r] : records_) {
    json s{{"id", id},          {"owner", r.owner},       {"sim_time", r.sim_time},
           {"x", r.view.x},     {"y", r.view.y},          {"psi", r.view.psi},
           {"sog", r.view.sog}, {"cog", r.cog},           {"length", r.view.length},
           {"beam", r.view.beam}, {"staleness", r.staleness(now)}, {"offline", r.offline}};
    if (with_tracks) {
      json t = json::array();
      for (const auto& p : r.track) t.push_back({p.t, p.x, p.y});
      s["track"] = std::move(t);
    }
    ships.push_back(std::move(s));
  }
  return {{"ships", std::move(ships)}};
}

}  // namespace harbour::tower
