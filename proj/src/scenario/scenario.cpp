#include "harbour/scenario/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "harbour/dynamics/ship_config.hpp"

namespace harbour::scenario {

using nlohmann::json;

namespace {

constexpr std::array kTelegraphNames = {
    "full_astern", "half_astern", "slow_astern", "dead_slow_astern", "stop",
    "dead_slow_ahead", "slow_ahead", "half_ahead", "full_ahead",
};

// Object view that reports problems with the JSON path of the field.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ScenarioError(path_ + (key.empty() ? "" : "." + key) + ": " + what);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* n) { return k == n; })) {
        fail(k, "unknown field");
      }
    }
  }

  double number(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "not finite");
    return d;
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::optional<double> optional_number(const std::string& key) const {
    return has(key) ? std::optional(number(key)) : std::nullopt;
  }

  std::string text(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    if (!j_.at(key).is_string()) fail(key, "expected a string");
    return j_.at(key).get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
    return j_.at(key).get<bool>();
  }

  Obj child(const std::string& key) const { return Obj(j_.at(key), path_ + "." + key); }
  const json& raw(const std::string& key) const { return j_.at(key); }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
};

HelmOrder read_order(const Obj& o) {
  HelmOrder h;
  auto exclusive = [&](const char* a, const char* b) {
    if (o.has(a) && o.has(b)) o.fail(a, std::string("conflicts with ") + b);
  };
  exclusive("rudder_deg", "rudder_rad");
  exclusive("shaft_rpm", "shaft_rps");
  exclusive("heading_deg", "heading_rad");
  if (o.has("rudder_deg")) h.rudder = deg2rad(o.number("rudder_deg"));
  if (o.has("rudder_rad")) h.rudder = o.number("rudder_rad");
  if (o.has("shaft_rpm")) h.shaft = rpm_to_rps(o.number("shaft_rpm"));
  if (o.has("shaft_rps")) h.shaft = o.number("shaft_rps");
  if (o.has("heading_deg")) h.heading_hold = wrap_pi(deg2rad(o.number("heading_deg")));
  if (o.has("heading_rad")) h.heading_hold = wrap_pi(o.number("heading_rad"));
  if (o.has("telegraph")) {
    try {
      h.telegraph = parse_telegraph(o.text("telegraph"));
    } catch (const ConfigError& e) {
      o.fail("telegraph", e.what());
    }
  }
  if (o.has("pitch")) {
    const double p = o.number("pitch");
    if (p < -1.0 || p > 1.0) o.fail("pitch", "must lie in [-1, 1]");
    h.pitch = p;
  }
  if (o.has("thrusters")) {
    const json& a = o.raw("thrusters");
    if (!a.is_array() || a.size() > dynamics::kMaxThrusters) {
      o.fail("thrusters", "expected an array of at most " +
                              std::to_string(dynamics::kMaxThrusters) + " levels");
    }
    std::array<double, dynamics::kMaxThrusters> levels{};
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number()) o.fail("thrusters", "levels must be numbers");
      levels[i] = a[i].get<double>();
      if (!(levels[i] >= -1.0 && levels[i] <= 1.0)) o.fail("thrusters", "levels lie in [-1, 1]");
    }
    h.thrusters = levels;
  }
  if (o.has("anchor")) {
    const std::string a = o.text("anchor");
    if (a == "drop") {
      h.anchor = AnchorAction::drop;
    } else if (a == "weigh") {
      h.anchor = AnchorAction::weigh;
    } else {
      o.fail("anchor", "expected 'drop' or 'weigh'");
    }
  }
  if (h.shaft && h.telegraph) o.fail("telegraph", "conflicts with an explicit shaft rate");
  return h;
}

}  // namespace

const char* to_string(Telegraph t) { return kTelegraphNames[static_cast<std::size_t>(t)]; }

Telegraph parse_telegraph(const std::string& name) {
  std::string n = name;
  for (char& c : n) {
    c = (c == '-' || c == ' ') ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (std::size_t i = 0; i < kTelegraphNames.size(); ++i) {
    if (n == kTelegraphNames[i]) return static_cast<Telegraph>(i);
  }
  throw ConfigError("unknown telegraph position '" + name + "'");
}

double TelegraphTable::fraction(Telegraph t) const {
  const double astern = astern_limit / full;
  switch (t) {
    case Telegraph::full_astern: return -astern * full;
    case Telegraph::half_astern: return -astern * half;
    case Telegraph::slow_astern: return -astern * slow;
    case Telegraph::dead_slow_astern: return -astern * dead_slow;
    case Telegraph::stop: return 0.0;
    case Telegraph::dead_slow_ahead: return dead_slow;
    case Telegraph::slow_ahead: return slow;
    case Telegraph::half_ahead: return half;
    case Telegraph::full_ahead: return full;
  }
  return 0.0;
}

double TelegraphTable::shaft_rate(Telegraph t, const dynamics::EngineModel& engine) const {
  return fraction(t) * engine.rated_rate;
}

std::vector<ScriptStep> parse_script(const json& steps, const std::string& where) {
  if (!steps.is_array()) throw ScenarioError(where + ": expected an array");
  std::vector<ScriptStep> out;
  double last = 0.0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const Obj st(steps[k], where + "[" + std::to_string(k) + "]");
    st.only({"t", "rudder_deg", "rudder_rad", "shaft_rpm", "shaft_rps", "telegraph", "pitch",
             "thrusters", "anchor", "heading_deg", "heading_rad"});
    ScriptStep step{st.number("t"), read_order(st)};
    if (step.time < last || step.time < 0.0) st.fail("t", "times must be non-decreasing and >= 0");
    last = step.time;
    out.push_back(step);
  }
  return out;
}

HelmOrder parse_order(const json& j) {
  const Obj o(j, "order");
  o.only({"rudder_deg", "rudder_rad", "shaft_rpm", "shaft_rps", "telegraph", "pitch", "thrusters",
          "anchor", "heading_deg", "heading_rad"});
  return read_order(o);
}

json order_json(const HelmOrder& h) {
  // Radians and rev/s so that a logged order parses back to the same bits.
  json j = json::object();
  if (h.rudder) j["rudder_rad"] = *h.rudder;
  if (h.shaft) j["shaft_rps"] = *h.shaft;
  if (h.telegraph) j["telegraph"] = to_string(*h.telegraph);
  if (h.pitch) j["pitch"] = *h.pitch;
  if (h.thrusters) j["thrusters"] = *h.thrusters;
  if (h.anchor) j["anchor"] = *h.anchor == AnchorAction::drop ? "drop" : "weigh";
  if (h.heading_hold) j["heading_rad"] = *h.heading_hold;
  return j;
}

bool EnvironmentChange::empty() const {
  return !current_x && !current_y && !wind_speed && !wind_direction && !set_wave;
}

void EnvironmentChange::apply(dynamics::Environment& env,
                              std::optional<seakeeping::WaveState>& sea) const {
  if (current_x) env.current_x = *current_x;
  if (current_y) env.current_y = *current_y;
  if (wind_speed) env.wind_speed = *wind_speed;
  if (wind_direction) env.wind_direction = *wind_direction;
  if (set_wave) sea = wave;
}

EnvironmentChange parse_environment_change(const json& j, double gravity) {
  const Obj e(j, "environment");
  e.only({"current_north_ms", "current_east_ms", "wind_speed_ms", "wind_from_deg", "wave"});
  EnvironmentChange c;
  c.current_x = e.optional_number("current_north_ms");
  c.current_y = e.optional_number("current_east_ms");
  c.wind_speed = e.optional_number("wind_speed_ms");
  if (c.wind_speed && *c.wind_speed < 0.0) e.fail("wind_speed_ms", "must be >= 0");
  if (e.has("wind_from_deg")) c.wind_direction = deg2rad(e.number("wind_from_deg"));
  if (e.has("wave")) {
    c.set_wave = true;
    if (!e.raw("wave").is_null()) {
      const Obj w = e.child("wave");
      w.only({"amplitude_m", "period_s", "towards_deg"});
      try {
        c.wave = seakeeping::wave_from_period(w.number("amplitude_m"), w.number("period_s"),
                                              wrap_pi(deg2rad(w.number("towards_deg", 0.0))),
                                              gravity);
      } catch (const ConfigError& err) {
        w.fail("", err.what());
      }
    }
  }
  return c;
}

const ShipEntry& Scenario::ship(const std::string& id) const {
  for (const auto& s : ships) {
    if (s.id == id) return s;
  }
  throw ScenarioError("scenario '" + name + "' has no ship '" + id + "'");
}

Scenario parse_scenario(const std::string& json_text, const std::string& source,
                        const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(source + ": " + e.what());
  }
  const Obj top(doc, source);
  top.only({"version", "name", "port", "environment", "rules", "telegraph", "ships"});
  if (top.number("version") != 1) top.fail("version", "unsupported scenario version");

  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() ? path : std::filesystem::path(base_dir) / path)
        .lexically_normal()
        .string();
  };

  Scenario sc;
  sc.source = source;
  sc.name = top.text("name");
  sc.port_path = resolve(top.text("port"));
  sc.port = port::load_geo(sc.port_path);

  if (top.has("environment")) {
    const Obj e = top.child("environment");
    e.only({"water_density", "current_north_ms", "current_east_ms", "wind_speed_ms",
            "wind_from_deg", "wave"});
    auto& env = sc.environment;
    env.water_density = e.number("water_density", env.water_density);
    env.current_x = e.number("current_north_ms", 0.0);
    env.current_y = e.number("current_east_ms", 0.0);
    env.wind_speed = e.number("wind_speed_ms", 0.0);
    env.wind_direction = deg2rad(e.number("wind_from_deg", 0.0));
    try {
      dynamics::validate(env);
    } catch (const ConfigError& err) {
      e.fail("", err.what());
    }
    if (e.has("wave")) {
      const Obj w = e.child("wave");
      w.only({"amplitude_m", "period_s", "towards_deg"});
      try {
        sc.wave = seakeeping::wave_from_period(w.number("amplitude_m"), w.number("period_s"),
                                               wrap_pi(deg2rad(w.number("towards_deg", 0.0))),
                                               env.gravity);
      } catch (const ConfigError& err) {
        w.fail("", err.what());
      }
    }
  }

  if (top.has("rules")) {
    const Obj r = top.child("rules");
    r.only({"channel_one_by_one", "speed_limit_kn"});
    sc.rules.channel_one_by_one = r.flag("channel_one_by_one", true);
    const double kn = r.number("speed_limit_kn", 8.0);
    if (!(kn > 0.0)) r.fail("speed_limit_kn", "must be positive");
    sc.rules.speed_limit = knots_to_ms(kn);
  }

  if (top.has("telegraph")) {
    const Obj t = top.child("telegraph");
    t.only({"dead_slow", "slow", "half", "full", "astern_limit"});
    auto& tt = sc.telegraph;
    tt.dead_slow = t.number("dead_slow", tt.dead_slow);
    tt.slow = t.number("slow", tt.slow);
    tt.half = t.number("half", tt.half);
    tt.full = t.number("full", tt.full);
    tt.astern_limit = t.number("astern_limit", tt.astern_limit);
    if (!(0.0 < tt.dead_slow && tt.dead_slow < tt.slow && tt.slow < tt.half &&
          tt.half < tt.full && tt.full <= 1.0)) {
      t.fail("", "detents must increase within (0, 1]");
    }
    if (!(tt.astern_limit > 0.0 && tt.astern_limit <= 1.0)) {
      t.fail("astern_limit", "must lie in (0, 1]");
    }
  }

  if (!top.has("ships") || !top.raw("ships").is_array()) top.fail("ships", "expected an array");
  std::set<std::string> ids;
  const json& ships = top.raw("ships");
  for (std::size_t i = 0; i < ships.size(); ++i) {
    const Obj s(ships[i], source + ".ships[" + std::to_string(i) + "]");
    s.only({"id", "config", "role", "initial", "mission", "script", "heading_gains"});
    ShipEntry e;
    e.id = s.text("id");
    if (e.id.empty()) s.fail("id", "must not be empty");
    if (!ids.insert(e.id).second) s.fail("id", "duplicate ship id '" + e.id + "'");
    e.config_path = resolve(s.text("config"));
    e.config = dynamics::load_ship_config(e.config_path);
    dynamics::validate(e.config, sc.environment);

    const std::string role = s.has("role") ? s.text("role") : "piloted";
    if (role == "piloted") {
      e.role = Role::piloted;
    } else if (role == "scripted") {
      e.role = Role::scripted;
    } else {
      s.fail("role", "expected 'piloted' or 'scripted'");
    }

    const Obj in = s.child("initial");
    in.only({"x_m", "y_m", "heading_deg", "speed_kn", "shaft_rpm"});
    e.initial.x = in.number("x_m");
    e.initial.y = in.number("y_m");
    e.initial.psi = wrap_pi(deg2rad(in.number("heading_deg", 0.0)));
    e.initial.u = knots_to_ms(in.number("speed_kn", 0.0));
    if (auto rpm = in.optional_number("shaft_rpm")) e.initial_shaft = rpm_to_rps(*rpm);

    const auto fp = port::footprint_of(e.id, e.initial, e.config.particulars);
    for (auto c : port::corners(fp)) {
      if (!sc.port.bounds.contains(c)) in.fail("", "ship '" + e.id + "' starts outside the chart");
    }
    for (const auto& land : sc.port.land) {
      if (port::footprint_hits_polygon(fp, land.outline)) {
        in.fail("", "ship '" + e.id + "' starts on land (" + land.name + ")");
      }
    }
    if (auto g = port::check_grounding(fp, e.config.particulars.draft, sc.port, 0.0)) {
      std::ostringstream m;
      m << "ship '" << e.id << "' starts aground: depth " << g->value << " m under draft "
        << e.config.particulars.draft << " m";
      in.fail("", m.str());
    }

    if (s.has("mission")) {
      const Obj m = s.child("mission");
      m.only({"berth", "tolerance_m", "max_sog_kn"});
      Mission mi;
      mi.berth = m.text("berth");
      try {
        sc.port.berth(mi.berth);
      } catch (const ConfigError& err) {
        m.fail("berth", err.what());
      }
      mi.tolerance = m.number("tolerance_m", mi.tolerance);
      mi.max_sog = knots_to_ms(m.number("max_sog_kn", ms_to_knots(mi.max_sog)));
      if (!(mi.tolerance > 0.0 && mi.max_sog > 0.0)) m.fail("", "tolerance and speed must be positive");
      e.mission = mi;
    }

    if (s.has("heading_gains")) {
      const Obj g = s.child("heading_gains");
      g.only({"kp", "kd"});
      e.script.gains = {g.number("kp"), g.number("kd")};
    }
    if (s.has("script")) {
      e.script.steps = parse_script(s.raw("script"), s.path() + ".script");
    }
    sc.ships.push_back(std::move(e));
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path, std::filesystem::path(path).parent_path().string());
}

}  // namespace harbour::scenario
