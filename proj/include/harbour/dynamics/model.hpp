#pragma once

// MMG surge/sway/yaw model: force evaluation, state derivatives and the
// fixed-step integrator. Every function here is pure.

#include <array>
#include <optional>
#include <span>

#include "harbour/dynamics/ship.hpp"

namespace harbour::dynamics {

/// Planar pose, body-frame through-water velocities and actual actuator
/// positions. Earth frame: x north, y east, psi clockwise from north.
struct ManeuverState {
  double x = 0.0, y = 0.0;
  double psi = 0.0;
  double u = 0.0, v = 0.0, r = 0.0;
  double delta = 0.0;  // actual rudder, rad (positive turns to starboard)
  double n = 0.0;      // actual shaft rate, rev/s
  std::array<double, kMaxThrusters> thrusters{};

  bool operator==(const ManeuverState&) const = default;
};

/// Anchor hold point; the anchor acts as a positional spring-damper.
struct AnchorHold {
  double x = 0.0, y = 0.0;

  bool operator==(const AnchorHold&) const = default;
};

/// Operator setpoints applied over a step (zero-order hold).
struct Controls {
  double rudder = 0.0;  // commanded rudder, rad
  double shaft = 0.0;   // commanded shaft rate, rev/s
  std::array<double, kMaxThrusters> thrusters{};
  std::optional<AnchorHold> anchor;
};

struct NonDimState {
  double mass = 0.0, mass_x = 0.0, mass_y = 0.0;
  double v = 0.0, r = 0.0;
};

struct ForceTriple {
  double X = 0.0, Y = 0.0, N = 0.0;
};

/// Total external force with its per-source breakdown. The totals are the
/// sum of the components in declaration order.
struct ForceSet {
  double X = 0.0, Y = 0.0, N = 0.0;
  ForceTriple hull, propeller, rudder, thruster, wind, anchor;
};

struct StateRate {
  double x = 0.0, y = 0.0, psi = 0.0;
  double u = 0.0, v = 0.0, r = 0.0;
  double delta = 0.0, n = 0.0;
};

/// Quantities of the rudder normal-force submodel at one state.
struct RudderInflow {
  double u_r = 0.0;      // longitudinal inflow at the rudder, m/s
  double v_r = 0.0;      // lateral inflow at the rudder, m/s
  double speed = 0.0;    // U_R, m/s
  double beta_r = 0.0;   // geometric inflow angle at the rudder, rad
  double alpha_r = 0.0;  // effective angle of attack, rad
  double normal_force = 0.0;  // F_N, N
};

double speed_magnitude(const ManeuverState& s);

/// Drift angle beta = atan2(-v, u).
double drift_angle(const ManeuverState& s);

/// Ground-referenced velocity (earth frame) including current.
std::array<double, 2> ground_velocity(const ManeuverState& s, const Environment& env);

/// Throws DegenerateSpeed when U < kMinSpeed.
NonDimState nondimensionalize(const ManeuverState& s, const ShipParticulars& p,
                              const MassProperties& m, const Environment& env);

/// Scales for X,Y (0.5 rho L d U^2) and N (0.5 rho L^2 d U^2).
ForceTriple dimensionalize_forces(const ForceTriple& nd, const ShipParticulars& p,
                                  const Environment& env, double speed);
ForceTriple nondimensionalize_forces(const ForceTriple& f, const ShipParticulars& p,
                                     const Environment& env, double speed);

/// Non-dimensional hull forces (X_H', Y_H', N_H').
ForceTriple hull_forces(const NonDimState& nd, const HydroDerivatives& d);

/// Dimensional hull forces including the low-speed branch below kMinSpeed.
ForceTriple hull_forces_dimensional(const ManeuverState& s, const ShipConfig& c,
                                    const Environment& env);

/// X0' = C_T S / (L d).
double resistance_coefficient(const ShipParticulars& p);

/// J = (1 - w_p) u / (n D_p); throws ZeroShaftRate for |n| < kMinShaftRate.
double advance_coefficient(double u, double n, const PropellerModel& prop);

double thrust_coefficient(double advance, const PropellerModel& prop);

/// X_p = (1 - t) rho n^2 D^4 K_T(J); zero below the shaft-rate guard.
double propeller_thrust(const ManeuverState& s, const PropellerModel& prop,
                        const Environment& env);

struct KtSample {
  double advance = 0.0;
  double kt = 0.0;
};

/// Least-squares quadratic K_T(J) fit. Throws RankDeficient with fewer than
/// three distinct advance values.
std::array<double, 3> fit_kt_coeffs(std::span<const KtSample> samples);

RudderInflow rudder_inflow(const ManeuverState& s, const ShipConfig& c, const Environment& env);

/// Dimensional rudder forces.
ForceTriple rudder_forces_dimensional(const ManeuverState& s, const ShipConfig& c,
                                      const Environment& env);

/// Non-dimensional rudder forces (X_R', Y_R', N_R'); throws DegenerateSpeed
/// below kMinSpeed.
ForceTriple rudder_forces(const ManeuverState& s, const ShipConfig& c, const Environment& env);

ForceTriple thruster_forces(const ManeuverState& s, std::span<const ThrusterConfig> thrusters);

ForceTriple wind_forces(const ManeuverState& s, const ShipConfig& c, const Environment& env);

ForceTriple anchor_forces(const ManeuverState& s, const AnchorHold& hold, const ShipConfig& c,
                          const Environment& env);

ForceSet total_forces(const ManeuverState& s, const Controls& ctl, const ShipConfig& c,
                      const Environment& env);

/// Time derivative of the state. Actuator rates are the instantaneous slew
/// rate of the rudder and the engine lag.
StateRate derivatives(const ManeuverState& s, const Controls& ctl, const ShipConfig& c,
                      const Environment& env);

/// Rate-limited rudder and first-order engine lag over dt. Throws
/// CommandOutOfRange when |rudder command| exceeds the rudder limit.
struct ActuatorPosition {
  double delta = 0.0;
  double n = 0.0;
};
ActuatorPosition actuator_update(double rudder_cmd, double shaft_cmd, const ActuatorPosition& actual,
                                 double dt, const RudderModel& rudder, const EngineModel& engine);

/// One classical RK4 step of length dt in (0, 1]. Throws NonFinite.
ManeuverState step(const ManeuverState& s, const Controls& ctl, const ShipConfig& c,
                   const Environment& env, double dt);

/// Shaft rate that holds a steady straight course at `speed` (through water)
/// with zero rudder, found by bisection on [0, engine.max_rate]. Returns
/// nullopt when the engine cannot reach the speed.
std::optional<double> trim_shaft_rate(double speed, const ShipConfig& c, const Environment& env);

}  // namespace harbour::dynamics
