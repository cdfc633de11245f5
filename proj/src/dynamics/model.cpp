#include "harbour/dynamics/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <Eigen/Dense>

namespace harbour::dynamics {

namespace {

double force_scale(const ShipParticulars& p, const Environment& env, double speed) {
  return 0.5 * env.water_density * p.length_pp * p.draft * speed * speed;
}

double mass_scale(const ShipParticulars& p, const Environment& env) {
  return 0.5 * env.water_density * p.length_pp * p.length_pp * p.draft;
}

double move_toward(double from, double to, double max_step) {
  if (to > from) return std::min(to, from + max_step);
  if (to < from) return std::max(to, from - max_step);
  return from;
}

double lag(double actual, double command, double dt, double tau) {
  return command + (actual - command) * std::exp(-dt / tau);
}

void check_rudder_command(double cmd, const RudderModel& r) {
  if (!(std::abs(cmd) <= r.max_angle + 1e-12)) {
    throw CommandOutOfRange("rudder command " + std::to_string(rad2deg(cmd)) +
                            " deg exceeds limit " + std::to_string(rad2deg(r.max_angle)) + " deg");
  }
}

void check_thruster_commands(const Controls& ctl) {
  for (double t : ctl.thrusters) {
    if (!(std::abs(t) <= 1.0)) throw CommandOutOfRange("thruster level outside [-1, 1]");
  }
}

struct Kinematic {
  double x, y, psi, u, v, r;
};

StateRate rates_at(const ManeuverState& s, const Controls& ctl, const ShipConfig& c,
                   const Environment& env) {
  const ForceSet f = total_forces(s, ctl, c, env);
  const auto& m = c.mass;
  StateRate d;
  d.u = (f.X + m.mass * s.v * s.r) / (m.mass + m.added_mass_x);
  d.v = (f.Y - m.mass * s.u * s.r) / (m.mass + m.added_mass_y);
  d.r = (f.N - c.particulars.x_g * f.Y) / (m.yaw_inertia + m.added_yaw_inertia);
  const double cp = std::cos(s.psi);
  const double sp = std::sin(s.psi);
  d.x = s.u * cp - s.v * sp + env.current_x;
  d.y = s.u * sp + s.v * cp + env.current_y;
  d.psi = s.r;
  return d;
}

bool all_finite(const StateRate& d) {
  return std::isfinite(d.x) && std::isfinite(d.y) && std::isfinite(d.psi) && std::isfinite(d.u) &&
         std::isfinite(d.v) && std::isfinite(d.r);
}

}  // namespace

double speed_magnitude(const ManeuverState& s) { return std::hypot(s.u, s.v); }

double drift_angle(const ManeuverState& s) { return std::atan2(-s.v, s.u); }

std::array<double, 2> ground_velocity(const ManeuverState& s, const Environment& env) {
  const double cp = std::cos(s.psi);
  const double sp = std::sin(s.psi);
  return {s.u * cp - s.v * sp + env.current_x, s.u * sp + s.v * cp + env.current_y};
}

NonDimState nondimensionalize(const ManeuverState& s, const ShipParticulars& p,
                              const MassProperties& m, const Environment& env) {
  const double speed = speed_magnitude(s);
  if (speed < kMinSpeed) {
    throw DegenerateSpeed("speed " + std::to_string(speed) + " m/s below non-dimensional floor");
  }
  const double ms = mass_scale(p, env);
  return NonDimState{m.mass / ms, m.added_mass_x / ms, m.added_mass_y / ms, s.v / speed,
                     s.r * p.length_pp / speed};
}

ForceTriple dimensionalize_forces(const ForceTriple& nd, const ShipParticulars& p,
                                  const Environment& env, double speed) {
  const double fs = force_scale(p, env, speed);
  return {nd.X * fs, nd.Y * fs, nd.N * fs * p.length_pp};
}

ForceTriple nondimensionalize_forces(const ForceTriple& f, const ShipParticulars& p,
                                     const Environment& env, double speed) {
  const double fs = force_scale(p, env, speed);
  return {f.X / fs, f.Y / fs, f.N / (fs * p.length_pp)};
}

ForceTriple hull_forces(const NonDimState& nd, const HydroDerivatives& d) {
  const double v = nd.v;
  const double r = nd.r;
  ForceTriple f;
  f.X = -(d.x0 + (d.xvr - nd.mass_y) * v * r);
  f.Y = d.yv * v + (d.yr + nd.mass_x) * r + d.yvvv * v * v * v + d.yvvr * v * v * r +
        d.yvrr * v * r * r + d.yrrr * r * r * r;
  f.N = d.nv * v + (d.nr + nd.mass_x) * r + d.nvvv * v * v * v + d.nvvr * v * v * r +
        d.nvrr * v * r * r + d.nrrr * r * r * r;
  return f;
}

ForceTriple hull_forces_dimensional(const ManeuverState& s, const ShipConfig& c,
                                    const Environment& env) {
  const auto& p = c.particulars;
  const double speed = speed_magnitude(s);
  const double ref = std::max(speed, kMinSpeed);
  const double ms = mass_scale(p, env);
  const NonDimState nd{c.mass.mass / ms, c.mass.added_mass_x / ms, c.mass.added_mass_y / ms,
                       s.v / ref, s.r * p.length_pp / ref};
  ForceTriple f = dimensionalize_forces(hull_forces(nd, c.hull), p, env, ref);
  // Resistance opposes the direction of surge.
  if (s.u < 0.0) f.X += 2.0 * c.hull.x0 * force_scale(p, env, ref);
  if (speed < kMinSpeed) {
    const double k = speed / kMinSpeed;
    f.X *= k;
    f.Y *= k;
    f.N *= k;
  }
  return f;
}

double resistance_coefficient(const ShipParticulars& p) {
  return p.resistance_coeff * p.wetted_surface / (p.length_pp * p.draft);
}

double advance_coefficient(double u, double n, const PropellerModel& prop) {
  if (std::abs(n) < kMinShaftRate) {
    throw ZeroShaftRate("shaft rate " + std::to_string(n) + " rev/s below guard");
  }
  return (1.0 - prop.wake_fraction) * u / (n * prop.diameter);
}

double thrust_coefficient(double advance, const PropellerModel& prop) {
  return prop.kt[0] + prop.kt[1] * advance + prop.kt[2] * advance * advance;
}

double propeller_thrust(const ManeuverState& s, const PropellerModel& prop,
                        const Environment& env) {
  if (std::abs(s.n) < kMinShaftRate) return 0.0;
  const double j = advance_coefficient(s.u, s.n, prop);
  const double d2 = prop.diameter * prop.diameter;
  const double thrust = (1.0 - prop.thrust_deduction) * env.water_density * s.n * s.n * d2 * d2 *
                        thrust_coefficient(j, prop);
  return s.n >= 0.0 ? thrust : -thrust;
}

std::array<double, 3> fit_kt_coeffs(std::span<const KtSample> samples) {
  std::set<double> distinct;
  for (const auto& s : samples) distinct.insert(s.advance);
  if (distinct.size() < 3) {
    throw RankDeficient("K_T fit needs at least 3 distinct advance coefficients, got " +
                        std::to_string(distinct.size()));
  }
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a(rows, 3);
  Eigen::VectorXd b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double j = samples[static_cast<std::size_t>(i)].advance;
    a(i, 0) = 1.0;
    a(i, 1) = j;
    a(i, 2) = j * j;
    b(i) = samples[static_cast<std::size_t>(i)].kt;
  }
  const Eigen::Vector3d x = a.colPivHouseholderQr().solve(b);
  return {x(0), x(1), x(2)};
}

RudderInflow rudder_inflow(const ManeuverState& s, const ShipConfig& c, const Environment& env) {
  const auto& rd = c.rudder;
  const auto& pr = c.propeller;
  RudderInflow in;

  const double u_p = (1.0 - pr.wake_fraction) * std::abs(s.u);
  double u_race = u_p;
  if (s.n >= kMinShaftRate) {
    const double kt = thrust_coefficient(advance_coefficient(std::abs(s.u), s.n, pr), pr);
    const double boost = 8.0 * kt * s.n * s.n * pr.diameter * pr.diameter / kPi;
    u_race = std::sqrt(std::max(0.0, u_p * u_p + boost));
  }
  const double in_race = (1.0 - rd.race_kappa) * u_p + rd.race_kappa * u_race;
  const double eta = rd.prop_height_ratio;
  in.u_r = rd.wake_ratio * std::sqrt(eta * in_race * in_race + (1.0 - eta) * u_p * u_p);

  const double lateral = s.v + rd.lever * c.particulars.length_pp * s.r;
  in.beta_r = std::atan2(-lateral, std::abs(s.u));
  in.v_r = rd.flow_straightening * lateral;
  in.speed = std::hypot(in.u_r, in.v_r);
  in.alpha_r = s.delta - rd.flow_straightening * in.beta_r;
  const double f_alpha = 6.13 * rd.aspect_ratio / (rd.aspect_ratio + 2.25);
  in.normal_force =
      0.5 * env.water_density * rd.area * f_alpha * in.speed * in.speed * std::sin(in.alpha_r);
  return in;
}

ForceTriple rudder_forces_dimensional(const ManeuverState& s, const ShipConfig& c,
                                      const Environment& env) {
  const auto& rd = c.rudder;
  const double fn = rudder_inflow(s, c, env).normal_force;
  const double sign = rd.interaction_sign == InteractionSign::printed ? -1.0 : 1.0;
  const double cd = std::cos(s.delta);
  ForceTriple f;
  f.X = -(1.0 - rd.drag_coeff) * fn * std::sin(s.delta);
  f.Y = -(1.0 + sign * rd.interaction_coeff) * fn * cd;
  f.N = -(rd.x_r + sign * rd.interaction_coeff * rd.x_h) * c.particulars.length_pp * fn * cd;
  return f;
}

ForceTriple rudder_forces(const ManeuverState& s, const ShipConfig& c, const Environment& env) {
  const double speed = speed_magnitude(s);
  if (speed < kMinSpeed) {
    throw DegenerateSpeed("rudder forces are not non-dimensionalizable at rest");
  }
  return nondimensionalize_forces(rudder_forces_dimensional(s, c, env), c.particulars, env, speed);
}

ForceTriple thruster_forces(const ManeuverState& s, std::span<const ThrusterConfig> thrusters) {
  const double speed = speed_magnitude(s);
  ForceTriple f;
  for (std::size_t i = 0; i < thrusters.size() && i < kMaxThrusters; ++i) {
    const auto& t = thrusters[i];
    const double taper = std::max(0.0, 1.0 - speed / t.cutoff_speed);
    const double side = s.thrusters[i] * t.rated_thrust * taper;
    f.Y += side;
    f.N += side * t.x_position;
  }
  return f;
}

ForceTriple wind_forces(const ManeuverState& s, const ShipConfig& c, const Environment& env) {
  const auto& w = c.wind;
  if (!w.enabled || env.wind_speed <= 0.0) return {};
  // Air velocity relative to the hull, earth frame.
  const auto ground = ground_velocity(s, env);
  const double ax = -env.wind_speed * std::cos(env.wind_direction) - ground[0];
  const double ay = -env.wind_speed * std::sin(env.wind_direction) - ground[1];
  const double cp = std::cos(s.psi);
  const double sp = std::sin(s.psi);
  const double ur = cp * ax + sp * ay;
  const double vr = -sp * ax + cp * ay;
  const double speed = std::hypot(ur, vr);
  const double q = 0.5 * w.air_density;
  ForceTriple f;
  f.X = q * w.cx * w.frontal_area * speed * ur;
  f.Y = q * w.cy * w.lateral_area * speed * vr;
  f.N = q * w.cn * w.lateral_area * c.particulars.length_pp * 2.0 * ur * vr;
  return f;
}

ForceTriple anchor_forces(const ManeuverState& s, const AnchorHold& hold, const ShipConfig& c,
                          const Environment& env) {
  // Critically damped positional spring with a 60 s natural period.
  const double mass = c.mass.mass + c.mass.added_mass_y;
  const double omega = kTwoPi / 60.0;
  const double k = mass * omega * omega;
  const double damping = 2.0 * std::sqrt(k * mass);
  const auto vel = ground_velocity(s, env);
  const double fx = -k * (s.x - hold.x) - damping * vel[0];
  const double fy = -k * (s.y - hold.y) - damping * vel[1];
  const double cp = std::cos(s.psi);
  const double sp = std::sin(s.psi);
  return {cp * fx + sp * fy, -sp * fx + cp * fy, 0.0};
}

ForceSet total_forces(const ManeuverState& s, const Controls& ctl, const ShipConfig& c,
                      const Environment& env) {
  ForceSet f;
  f.hull = hull_forces_dimensional(s, c, env);
  f.propeller = {propeller_thrust(s, c.propeller, env), 0.0, 0.0};
  f.rudder = rudder_forces_dimensional(s, c, env);
  f.thruster = thruster_forces(s, c.thrusters);
  f.wind = wind_forces(s, c, env);
  if (ctl.anchor) f.anchor = anchor_forces(s, *ctl.anchor, c, env);
  f.X = f.hull.X + f.propeller.X + f.rudder.X + f.thruster.X + f.wind.X + f.anchor.X;
  f.Y = f.hull.Y + f.propeller.Y + f.rudder.Y + f.thruster.Y + f.wind.Y + f.anchor.Y;
  f.N = f.hull.N + f.propeller.N + f.rudder.N + f.thruster.N + f.wind.N + f.anchor.N;
  return f;
}

StateRate derivatives(const ManeuverState& s, const Controls& ctl, const ShipConfig& c,
                      const Environment& env) {
  StateRate d = rates_at(s, ctl, c, env);
  if (ctl.rudder > s.delta) {
    d.delta = c.rudder.max_rate;
  } else if (ctl.rudder < s.delta) {
    d.delta = -c.rudder.max_rate;
  }
  d.n = (ctl.shaft - s.n) / c.engine.time_constant;
  return d;
}

ActuatorPosition actuator_update(double rudder_cmd, double shaft_cmd, const ActuatorPosition& actual,
                                 double dt, const RudderModel& rudder, const EngineModel& engine) {
  check_rudder_command(rudder_cmd, rudder);
  return {move_toward(actual.delta, rudder_cmd, rudder.max_rate * dt),
          lag(actual.n, shaft_cmd, dt, engine.time_constant)};
}

ManeuverState step(const ManeuverState& s, const Controls& ctl, const ShipConfig& c,
                   const Environment& env, double dt) {
  if (!(dt > 0.0 && dt <= 1.0)) throw Error("step size must be in (0, 1] s");
  check_rudder_command(ctl.rudder, c.rudder);
  check_thruster_commands(ctl);

  ManeuverState stage = s;
  stage.thrusters = ctl.thrusters;
  auto actuators_at = [&](double h) {
    return actuator_update(ctl.rudder, ctl.shaft, {s.delta, s.n}, h, c.rudder, c.engine);
  };
  auto eval = [&](const Kinematic& k, double h) {
    const ActuatorPosition a = h == 0.0 ? ActuatorPosition{s.delta, s.n} : actuators_at(h);
    stage.x = k.x;
    stage.y = k.y;
    stage.psi = k.psi;
    stage.u = k.u;
    stage.v = k.v;
    stage.r = k.r;
    stage.delta = a.delta;
    stage.n = a.n;
    const StateRate d = rates_at(stage, ctl, c, env);
    if (!all_finite(d)) throw NonFinite("non-finite state derivative; check ship coefficients");
    return d;
  };
  auto advance = [](const Kinematic& k, const StateRate& d, double h) {
    return Kinematic{k.x + h * d.x, k.y + h * d.y, k.psi + h * d.psi,
                     k.u + h * d.u, k.v + h * d.v, k.r + h * d.r};
  };

  const Kinematic k0{s.x, s.y, s.psi, s.u, s.v, s.r};
  const double half = 0.5 * dt;
  const StateRate d1 = eval(k0, 0.0);
  const StateRate d2 = eval(advance(k0, d1, half), half);
  const StateRate d3 = eval(advance(k0, d2, half), half);
  const StateRate d4 = eval(advance(k0, d3, dt), dt);

  const double w = dt / 6.0;
  auto combine = [&](double base, double a, double b, double cc, double d) {
    return base + w * (a + 2.0 * b + 2.0 * cc + d);
  };
  ManeuverState out = s;
  out.x = combine(s.x, d1.x, d2.x, d3.x, d4.x);
  out.y = combine(s.y, d1.y, d2.y, d3.y, d4.y);
  out.psi = wrap_pi(combine(s.psi, d1.psi, d2.psi, d3.psi, d4.psi));
  out.u = combine(s.u, d1.u, d2.u, d3.u, d4.u);
  out.v = combine(s.v, d1.v, d2.v, d3.v, d4.v);
  out.r = combine(s.r, d1.r, d2.r, d3.r, d4.r);
  const ActuatorPosition a = actuators_at(dt);
  out.delta = a.delta;
  out.n = a.n;
  out.thrusters = ctl.thrusters;
  return out;
}

std::optional<double> trim_shaft_rate(double speed, const ShipConfig& c, const Environment& env) {
  if (!(speed > 0.0)) return std::nullopt;
  auto surge_force = [&](double n) {
    ManeuverState s;
    s.u = speed;
    s.n = n;
    return hull_forces_dimensional(s, c, env).X + propeller_thrust(s, c.propeller, env);
  };
  double lo = 0.0;
  double hi = c.engine.max_rate;
  if (surge_force(hi) < 0.0) return std::nullopt;
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (surge_force(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace harbour::dynamics
