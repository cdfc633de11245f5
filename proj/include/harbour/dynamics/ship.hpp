#pragma once

// Ship description consumed by the maneuvering model: particulars, mass
// properties, hull derivatives, propeller, rudder, thrusters, wind and engine.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "harbour/common/error.hpp"
#include "harbour/common/units.hpp"

namespace harbour::dynamics {

inline constexpr std::size_t kMaxThrusters = 4;

/// Below this through-water speed the non-dimensional variables are
/// undefined and the hull model switches to its low-speed branch.
inline constexpr double kMinSpeed = 0.05;  // m/s

/// Shaft-rate guard for the advance coefficient.
inline constexpr double kMinShaftRate = 1e-3;  // rev/s

class DegenerateSpeed : public Error {
 public:
  using Error::Error;
};

class ZeroShaftRate : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class CommandOutOfRange : public Error {
 public:
  using Error::Error;
};

struct ShipParticulars {
  double length_pp = 0.0;            // m
  double length_wl = 0.0;            // m
  double breadth = 0.0;              // m
  double hull_depth = 0.0;           // m
  double draft = 0.0;                // m
  double displacement_volume = 0.0;  // m^3
  double block_coeff = 0.0;
  double x_g = 0.0;             // midship -> CG, positive forward, m
  double wetted_surface = 0.0;  // m^2
  double resistance_coeff = 0.0;  // C_T
  double yaw_gyradius_fraction = 0.25;  // k_zz / L
};

struct MassProperties {
  double mass = 0.0;               // kg
  double added_mass_x = 0.0;       // kg
  double added_mass_y = 0.0;       // kg
  double yaw_inertia = 0.0;        // kg m^2
  double added_yaw_inertia = 0.0;  // kg m^2
};

/// Non-dimensional hull coefficients of the cubic surge/sway/yaw expansion.
struct HydroDerivatives {
  double x0 = 0.0;
  double xvr = 0.0;
  double yv = 0.0, yr = 0.0, yvvv = 0.0, yvvr = 0.0, yvrr = 0.0, yrrr = 0.0;
  double nv = 0.0, nr = 0.0, nvvv = 0.0, nvvr = 0.0, nvrr = 0.0, nrrr = 0.0;
};

enum class RotationHand { right, left };

struct PropellerModel {
  double diameter = 0.0;  // m
  int blade_count = 0;
  double pitch_ratio = 0.0;
  RotationHand hand = RotationHand::right;
  double wake_fraction = 0.0;     // w_p
  double thrust_deduction = 0.0;  // t
  std::array<double, 3> kt{};     // K_T = C1 + C2 J + C3 J^2
};

/// Which form of the hull-rudder interaction terms is used in the sway and
/// yaw rudder forces: `printed` is (1 - a_H), (x_R - a_H x_H); `conventional`
/// is (1 + a_H), (x_R + a_H x_H).
enum class InteractionSign { printed, conventional };

struct RudderModel {
  double area = 0.0;          // lateral (projected) area A_R, m^2
  double surface_area = 0.0;  // total wetted surface, informational, m^2
  double aspect_ratio = 0.0;  // Lambda
  double drag_coeff = 0.0;    // t_R
  double interaction_coeff = 0.0;  // a_H
  double x_r = -0.5;               // x_R', non-dimensional
  double x_h = -0.45;              // x_H', non-dimensional
  double max_angle = deg2rad(35.0);
  double max_rate = deg2rad(2.32);  // rad/s

  // Normal-force submodel.
  double wake_ratio = 1.0;           // epsilon = (1 - w_R) / (1 - w_P)
  double race_kappa = 0.5;           // propeller race acceleration factor
  double prop_height_ratio = 0.8;    // eta = D_p / H_R
  double flow_straightening = 0.5;   // gamma
  double lever = -0.7;               // l_R', effective rudder lever for beta_R
  InteractionSign interaction_sign = InteractionSign::printed;
};

struct ThrusterConfig {
  std::string name;
  double rated_thrust = 0.0;  // N at level 1
  double x_position = 0.0;    // m from midship, positive forward
  double cutoff_speed = 3.0;  // m/s, effectiveness reaches zero here
};

/// Optional quadratic windage model, off unless `enabled`.
struct WindModel {
  bool enabled = false;
  double air_density = 1.225;
  double frontal_area = 0.0;  // m^2
  double lateral_area = 0.0;  // m^2
  double cx = 0.6;
  double cy = 0.9;
  double cn = 0.1;
};

struct EngineModel {
  double time_constant = 20.0;  // s
  double rated_rate = 0.0;      // rev/s at full ahead
  double max_rate = 0.0;        // rev/s absolute limit
};

/// Transverse stability data used by the roll response. A zero
/// roll_period selects the default T_N = 2 pi (0.4 B) / sqrt(g GM_T);
/// roll_damping / roll_moment override the derived B_44 and M when set.
struct StabilityData {
  double gm_t = 0.6;  // m
  double roll_period = 0.0;  // s
  double roll_damping_ratio = 0.05;
  std::optional<double> roll_damping;  // N m s / rad
  std::optional<double> roll_moment;   // N m per metre of wave amplitude
};

struct ShipConfig {
  std::string name;
  ShipParticulars particulars;
  MassProperties mass;
  HydroDerivatives hull;
  PropellerModel propeller;
  RudderModel rudder;
  std::vector<ThrusterConfig> thrusters;
  WindModel wind;
  EngineModel engine;
  StabilityData stability;
};

struct Environment {
  double water_density = 1025.0;
  double gravity = 9.81;
  double current_x = 0.0;  // earth-fixed (north), m/s
  double current_y = 0.0;  // earth-fixed (east), m/s
  double wind_speed = 0.0;      // m/s
  double wind_direction = 0.0;  // rad, direction the wind comes from

  bool operator==(const Environment&) const = default;
};

/// Denny's wetted-surface estimate S = 1.025 L (C_b B + 1.7 d).
double denny_wetted_surface(double length_pp, double breadth, double draft, double block_coeff);

/// Fills mass properties from the particulars with the default heuristics:
/// m = rho V, m_x = 0.05 m, m_y = 0.9 m, I_zz = m (k L)^2, i_zz = 0.1 I_zz.
MassProperties default_mass_properties(const ShipParticulars& p, double water_density);

/// Throws ConfigError describing the first violated invariant.
void validate(const ShipConfig& config, const Environment& env);

void validate(const Environment& env);

}  // namespace harbour::dynamics
