#pragma once

// Heave, pitch and roll in regular waves. Each degree of freedom is an
// uncoupled linear oscillator
//
//   p x'' + q x' + x = E f(phase),   phase' = encounter frequency
//
// with coefficients from closed-form box-hull expressions, advanced in the
// time domain so heading and speed changes act immediately.

#include <optional>

#include "harbour/common/error.hpp"
#include "harbour/dynamics/ship.hpp"

namespace harbour::seakeeping {

class UnsupportedRegime : public Error {
 public:
  using Error::Error;
};

struct WaveState {
  double amplitude = 0.0;    // m
  double frequency = 0.0;    // rad/s
  double wave_number = 0.0;  // rad/m
  double direction = 0.0;    // earth-fixed propagation direction, rad
};

/// Deep-water regular wave (k = w^2 / g). Throws ConfigError for a < 0 or
/// non-positive frequency.
WaveState make_wave(double amplitude, double frequency, double direction, double gravity);
WaveState wave_from_period(double amplitude, double period, double direction, double gravity);

/// Box-hull description used by the closed forms.
struct HullForm {
  double length = 0.0;
  double breadth = 0.0;
  double draft = 0.0;
  double displacement_mass = 0.0;  // kg
  double gm_t = 0.0;               // m
  double roll_period = 0.0;        // s; zero selects 2 pi (0.4 B) / sqrt(g GM_T)
  double roll_damping_ratio = 0.05;
  std::optional<double> roll_damping;
  std::optional<double> roll_moment;
};

HullForm hull_form(const dynamics::ShipConfig& ship, double water_density);

struct SeakeepingParams {
  // Heave and pitch share inertia and damping.
  double sectional_damping = 0.0;  // A
  double forcing_heave = 0.0;      // F
  double forcing_pitch = 0.0;      // G, 1/m
  double alpha = 0.0;              // encounter / wave frequency ratio
  double encounter_frequency = 0.0;
  double inertia_coeff = 0.0;  // p = 2 k T / w^2
  double damping_coeff = 0.0;  // q = A^2 / (k B alpha^3 w)
  double amplitude = 0.0;      // a

  double roll_natural_period = 0.0;  // T_N
  double roll_damping = 0.0;         // B_44
  double restoring = 0.0;            // C_44
  double roll_moment = 0.0;          // M
  double gm_t = 0.0;
  double displacement_mass = 0.0;
};

/// |w - k U cos(chi)|; chi is the wave direction relative to the heading,
/// 0 = following seas, pi = head seas.
double encounter_frequency(double frequency, double wave_number, double speed, double chi);

/// C_44 = g GM_T Delta.
double restoring_coefficient(double gravity, double gm_t, double displacement_mass);

/// Throws UnsupportedRegime when the ship overtakes or rides the waves
/// (w - k U cos chi <= 0).
SeakeepingParams compute_params(const HullForm& hull, const WaveState& wave, double speed,
                                double chi, double gravity, double water_density);

/// Steady amplitude of p x'' + q x' + x = E cos(w t).
double steady_amplitude(double inertia, double damping, double forcing, double frequency);

struct SeakeepingState {
  double heave = 0.0, heave_rate = 0.0;
  double pitch = 0.0, pitch_rate = 0.0;
  double roll = 0.0, roll_rate = 0.0;
  double phase = 0.0;  // encounter phase in [0, 2 pi)

  bool operator==(const SeakeepingState&) const = default;
};

/// One RK4 step, dt in (0, 0.5]. Heave is forced with cos(phase), pitch with
/// sin(phase), roll with cos(phase).
SeakeepingState step_seakeeping(const SeakeepingState& s, const SeakeepingParams& p, double dt);

/// Steady amplitudes of the three degrees of freedom for the given params.
struct SteadyResponse {
  double heave = 0.0, pitch = 0.0, roll = 0.0;
};
SteadyResponse steady_response(const SeakeepingParams& p);

}  // namespace harbour::seakeeping
