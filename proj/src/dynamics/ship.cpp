#include "harbour/dynamics/ship.hpp"

#include <cmath>

namespace harbour::dynamics {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

double denny_wetted_surface(double length_pp, double breadth, double draft, double block_coeff) {
  return 1.025 * length_pp * (block_coeff * breadth + 1.7 * draft);
}

MassProperties default_mass_properties(const ShipParticulars& p, double water_density) {
  MassProperties m;
  m.mass = water_density * p.displacement_volume;
  m.added_mass_x = 0.05 * m.mass;
  m.added_mass_y = 0.9 * m.mass;
  const double k = p.yaw_gyradius_fraction * p.length_pp;
  m.yaw_inertia = m.mass * k * k;
  m.added_yaw_inertia = 0.1 * m.yaw_inertia;
  return m;
}

void validate(const Environment& env) {
  require(env.water_density > 0.0 && finite(env.water_density), "water density must be positive");
  require(env.gravity > 0.0 && finite(env.gravity), "gravity must be positive");
  require(finite(env.current_x) && finite(env.current_y), "current must be finite");
  require(env.wind_speed >= 0.0 && finite(env.wind_direction), "wind must be finite and non-negative");
}

void validate(const ShipConfig& c, const Environment& env) {
  validate(env);
  const auto& p = c.particulars;
  require(p.length_pp > 0 && p.length_wl > 0 && p.breadth > 0 && p.hull_depth > 0 && p.draft > 0,
          "ship lengths must be positive");
  require(p.block_coeff > 0 && p.block_coeff < 1, "block coefficient must be in (0, 1)");
  require(p.draft < p.hull_depth, "draft must be less than hull depth");
  const double nominal = p.block_coeff * p.length_pp * p.breadth * p.draft;
  require(std::abs(p.displacement_volume - nominal) <= 0.02 * nominal,
          "displacement volume inconsistent with C_b L B d (more than 2% off)");
  require(p.wetted_surface > p.length_pp * p.draft, "wetted surface must exceed L d");
  require(p.resistance_coeff >= 0 && finite(p.resistance_coeff), "C_T must be non-negative");
  require(finite(p.x_g), "x_g must be finite");

  const auto& m = c.mass;
  require(m.mass >= 0 && m.added_mass_x >= 0 && m.added_mass_y >= 0 && m.yaw_inertia >= 0 &&
              m.added_yaw_inertia >= 0,
          "mass properties must be non-negative");
  require(m.added_mass_x < m.added_mass_y, "surge added mass must be smaller than sway added mass");
  const double rho_v = env.water_density * p.displacement_volume;
  require(std::abs(m.mass - rho_v) <= 1e-3 * rho_v, "mass must equal rho * displacement within 0.1%");
  require(m.yaw_inertia + m.added_yaw_inertia > 0, "yaw inertia must be positive");

  const auto& h = c.hull;
  for (double v : {h.x0, h.xvr, h.yv, h.yr, h.yvvv, h.yvvr, h.yvrr, h.yrrr, h.nv, h.nr, h.nvvv,
                   h.nvvr, h.nvrr, h.nrrr}) {
    require(finite(v), "hull derivatives must be finite");
  }
  require(h.x0 > 0, "X0' must be positive");
  require(h.yv < 0, "Y_v' must be negative");

  const auto& pr = c.propeller;
  require(pr.diameter > 0, "propeller diameter must be positive");
  require(pr.wake_fraction >= 0 && pr.wake_fraction < 1, "wake fraction must be in [0, 1)");
  require(pr.thrust_deduction >= 0 && pr.thrust_deduction < 1, "thrust deduction must be in [0, 1)");
  require(pr.kt[0] > 0, "K_T(0) = C1 must be positive");
  for (double k : pr.kt) require(finite(k), "K_T coefficients must be finite");

  const auto& r = c.rudder;
  require(r.area > 0 && r.aspect_ratio > 0, "rudder area and aspect ratio must be positive");
  require(r.drag_coeff >= 0 && r.drag_coeff < 1, "rudder t_R must be in [0, 1)");
  require(r.interaction_coeff >= 0 && r.interaction_coeff < 1, "rudder a_H must be in [0, 1)");
  require(r.x_r < 0, "x_R' must be negative (rudder abaft midship)");
  require(r.max_angle > 0 && r.max_angle <= kPi / 2, "rudder max angle must be in (0, 90] deg");
  require(r.max_rate > 0, "rudder max rate must be positive");
  require(r.wake_ratio > 0 && r.prop_height_ratio >= 0 && r.prop_height_ratio <= 1 &&
              r.flow_straightening >= 0 && finite(r.lever) && finite(r.race_kappa),
          "rudder normal-force submodel coefficients out of range");

  require(c.thrusters.size() <= kMaxThrusters, "too many thrusters");
  for (const auto& t : c.thrusters) {
    require(t.rated_thrust >= 0 && t.cutoff_speed > 0 && finite(t.x_position),
            "thruster '" + t.name + "' has invalid ratings");
  }
  if (c.wind.enabled) {
    require(c.wind.air_density > 0 && c.wind.frontal_area >= 0 && c.wind.lateral_area >= 0,
            "wind model coefficients out of range");
  }
  require(c.stability.gm_t >= 0 && c.stability.roll_period >= 0 &&
              c.stability.roll_damping_ratio >= 0,
          "stability data out of range");
  require(c.engine.time_constant > 0, "engine time constant must be positive");
  require(c.engine.rated_rate > 0 && c.engine.max_rate >= c.engine.rated_rate,
          "engine rated/max shaft rates invalid");
}

}  // namespace harbour::dynamics
