#include "harbour/bridge/session.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace harbour::bridge {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt_deg(double rad) {
  std::ostringstream o;
  o << rad2deg(rad) << " deg";
  return o.str();
}

}  // namespace

const std::vector<std::string>& ship_state_attributes() {
  static const std::vector<std::string> names = {
      "x", "y", "psi", "u", "v", "r", "delta", "n", "heave", "pitch", "roll", "sog", "cog",
      "step", "delta_ordered", "n_ordered", "thrusters", "thrusters_ordered", "telegraph",
      "heading_hold", "anchor", "drift", "wave_forcing", "wind_speed", "wind_from",
      "current_north", "current_east", "depth", "depth_under_keel", "length", "beam", "draft"};
  return names;
}

json to_json(const ConningSnapshot& s) {
  const auto& st = s.state;
  json j{
      {"x", st.x}, {"y", st.y}, {"psi", st.psi}, {"u", st.u}, {"v", st.v}, {"r", st.r},
      {"delta", st.delta}, {"n", st.n},
      {"heave", s.motions.heave}, {"pitch", s.motions.pitch}, {"roll", s.motions.roll},
      {"sog", s.sog}, {"cog", s.cog},
      {"step", s.step},
      {"delta_ordered", s.rudder_ordered}, {"n_ordered", s.shaft_ordered},
      {"thrusters", st.thrusters}, {"thrusters_ordered", s.thrusters_ordered},
      {"telegraph", s.telegraph ? json(scenario::to_string(*s.telegraph)) : json(nullptr)},
      {"heading_hold", optional_json(s.heading_hold)},
      {"anchor", s.anchor ? json{s.anchor->x, s.anchor->y} : json(nullptr)},
      {"drift", s.drift}, {"wave_forcing", s.wave_forcing},
      {"wind_speed", s.environment.wind_speed}, {"wind_from", s.environment.wind_direction},
      {"current_north", s.environment.current_x}, {"current_east", s.environment.current_y},
      {"depth", optional_json(s.depth)}, {"depth_under_keel", optional_json(s.depth_under_keel)},
      {"length", s.length}, {"beam", s.beam}, {"draft", s.draft},
  };
  return j;
}

ShipSession::ShipSession(const scenario::Scenario& sc, const std::string& ship_id, double dt)
    : entry_(sc.ship(ship_id)),
      port_(sc.port),
      telegraph_table_(sc.telegraph),
      dt_(dt),
      env_(sc.environment),
      wave_(sc.wave) {
  if (!(dt > 0.0 && dt <= 0.5)) throw ConfigError("time step must be in (0, 0.5] s");
  hull_ = seakeeping::hull_form(entry_.config, env_.water_density);
  state_ = entry_.initial;
  if (entry_.initial_shaft) {
    shaft_base_ = *entry_.initial_shaft;
  } else if (state_.u > 0.0) {
    const auto trim = dynamics::trim_shaft_rate(state_.u, entry_.config, env_);
    if (!trim) {
      throw scenario::ScenarioError("ship '" + ship_id + "': engine cannot hold the initial speed");
    }
    shaft_base_ = *trim;
  }
  if (std::abs(shaft_base_) > entry_.config.engine.max_rate) {
    throw scenario::ScenarioError("ship '" + ship_id + "': initial shaft rate above the engine limit");
  }
  state_.n = shaft_base_;
}

void ShipSession::apply(const scenario::HelmOrder& o) {
  const auto& cfg = entry_.config;
  if (o.rudder && o.heading_hold) throw OrderRejected("rudder and heading hold in one order");
  if (o.rudder && !(std::abs(*o.rudder) <= cfg.rudder.max_angle)) {
    throw OrderRejected("rudder " + fmt_deg(*o.rudder) + " beyond the " +
                        fmt_deg(cfg.rudder.max_angle) + " limit");
  }
  double base = shaft_base_;
  if (o.shaft) base = *o.shaft;
  if (o.telegraph) base = telegraph_table_.shaft_rate(*o.telegraph, cfg.engine);
  const double pitch = o.pitch.value_or(pitch_);
  if (!(std::abs(base * pitch) <= cfg.engine.max_rate)) {
    throw OrderRejected("shaft order beyond the engine limit of " +
                        std::to_string(rps_to_rpm(cfg.engine.max_rate)) + " rpm");
  }
  if (o.thrusters) {
    for (std::size_t i = cfg.thrusters.size(); i < dynamics::kMaxThrusters; ++i) {
      if ((*o.thrusters)[i] != 0.0) {
        throw OrderRejected("ship has " + std::to_string(cfg.thrusters.size()) + " thrusters");
      }
    }
  }
  if (o.anchor == scenario::AnchorAction::drop && !anchor_) {
    const auto g = dynamics::ground_velocity(state_, env_);
    const double sog = std::hypot(g[0], g[1]);
    if (!(sog < kAnchorMaxSog)) {
      throw OrderRejected("anchor drop at " + std::to_string(ms_to_knots(sog)) +
                          " kn; slow below 0.5 kn first");
    }
  }

  if (o.rudder) {
    rudder_cmd_ = *o.rudder;
    heading_hold_.reset();
  }
  if (o.heading_hold) heading_hold_ = o.heading_hold;
  if (o.shaft) telegraph_.reset();
  if (o.telegraph) telegraph_ = o.telegraph;
  shaft_base_ = base;
  pitch_ = pitch;
  if (o.thrusters) thrusters_cmd_ = *o.thrusters;
  if (o.anchor == scenario::AnchorAction::drop && !anchor_) {
    anchor_ = dynamics::AnchorHold{state_.x, state_.y};
  }
  if (o.anchor == scenario::AnchorAction::weigh) anchor_.reset();
}

void ShipSession::set_environment(const scenario::EnvironmentChange& change) {
  dynamics::Environment env = env_;
  std::optional<seakeeping::WaveState> wave = wave_;
  change.apply(env, wave);
  dynamics::validate(env);
  env_ = env;
  wave_ = wave;
}

dynamics::Controls ShipSession::controls() const {
  dynamics::Controls c;
  c.rudder = rudder_cmd_;
  if (heading_hold_) {
    const auto& g = entry_.script.gains;
    const double lim = entry_.config.rudder.max_angle;
    c.rudder = std::clamp(g.kp * wrap_pi(*heading_hold_ - state_.psi) - g.kd * state_.r, -lim, lim);
  }
  c.shaft = shaft_base_ * pitch_;
  c.thrusters = thrusters_cmd_;
  c.anchor = anchor_;
  return c;
}

void ShipSession::step() {
  const dynamics::Controls ctl = controls();
  if (heading_hold_) rudder_cmd_ = ctl.rudder;

  seakeeping::SeakeepingParams params;
  const double speed = dynamics::speed_magnitude(state_);
  if (wave_) {
    const double chi = wrap_pi(wave_->direction - state_.psi);
    try {
      params = seakeeping::compute_params(hull_, *wave_, speed, chi, env_.gravity,
                                          env_.water_density);
      wave_forcing_ = true;
    } catch (const seakeeping::UnsupportedRegime&) {
      // Riding the waves: keep the oscillators but remove the forcing.
      params = seakeeping::compute_params(hull_, *wave_, 0.0, chi, env_.gravity,
                                          env_.water_density);
      params.amplitude = 0.0;
      wave_forcing_ = false;
    }
  } else {
    const auto calm = seakeeping::make_wave(0.0, 1.0, 0.0, env_.gravity);
    params = seakeeping::compute_params(hull_, calm, 0.0, 0.0, env_.gravity, env_.water_density);
    wave_forcing_ = true;
  }

  state_ = dynamics::step(state_, ctl, entry_.config, env_, dt_);
  motions_ = seakeeping::step_seakeeping(motions_, params, dt_);
  ++steps_;
}

ConningSnapshot ShipSession::snapshot() const {
  ConningSnapshot s;
  s.ship = entry_.id;
  s.step = steps_;
  s.sim_time = sim_time();
  s.state = state_;
  s.rudder_ordered = heading_hold_ ? controls().rudder : rudder_cmd_;
  s.shaft_ordered = shaft_base_ * pitch_;
  s.thrusters_ordered = thrusters_cmd_;
  s.telegraph = telegraph_;
  s.heading_hold = heading_hold_;
  s.anchor = anchor_;
  const auto g = dynamics::ground_velocity(state_, env_);
  s.sog = std::hypot(g[0], g[1]);
  s.cog = wrap_two_pi(std::atan2(g[1], g[0]));
  s.drift = dynamics::drift_angle(state_);
  s.motions = motions_;
  s.wave_forcing = wave_forcing_;
  s.environment = env_;
  const auto& p = entry_.config.particulars;
  s.length = p.length_pp;
  s.beam = p.breadth;
  s.draft = p.draft;
  try {
    s.depth = port_.depth_at({state_.x, state_.y});
    s.depth_under_keel = *s.depth - p.draft;
  } catch (const port::OutOfBounds&) {
  }
  return s;
}

}  // namespace harbour::bridge
