#include "harbour/seakeeping/seakeeping.hpp"

#include <cmath>
#include <string>

namespace harbour::seakeeping {

namespace {

// sin(x)/x with its series near zero.
double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

struct Oscillator {
  double p = 0.0;  // inertia
  double q = 0.0;  // damping
  double e = 0.0;  // forcing amplitude
};

double accel(const Oscillator& o, double x, double xd, double forcing) {
  return (o.e * forcing - o.q * xd - x) / o.p;
}

}  // namespace

WaveState make_wave(double amplitude, double frequency, double direction, double gravity) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw ConfigError("wave amplitude must be non-negative");
  }
  if (!(frequency > 0.0) || !std::isfinite(frequency)) {
    throw ConfigError("wave frequency must be positive");
  }
  if (!(gravity > 0.0)) throw ConfigError("gravity must be positive");
  return WaveState{amplitude, frequency, frequency * frequency / gravity, direction};
}

WaveState wave_from_period(double amplitude, double period, double direction, double gravity) {
  if (!(period > 0.0)) throw ConfigError("wave period must be positive");
  return make_wave(amplitude, kTwoPi / period, direction, gravity);
}

HullForm hull_form(const dynamics::ShipConfig& ship, double water_density) {
  HullForm h;
  h.length = ship.particulars.length_pp;
  h.breadth = ship.particulars.breadth;
  h.draft = ship.particulars.draft;
  h.displacement_mass = water_density * ship.particulars.displacement_volume;
  h.gm_t = ship.stability.gm_t;
  h.roll_period = ship.stability.roll_period;
  h.roll_damping_ratio = ship.stability.roll_damping_ratio;
  h.roll_damping = ship.stability.roll_damping;
  h.roll_moment = ship.stability.roll_moment;
  return h;
}

double encounter_frequency(double frequency, double wave_number, double speed, double chi) {
  return std::abs(frequency - wave_number * speed * std::cos(chi));
}

double restoring_coefficient(double gravity, double gm_t, double displacement_mass) {
  return gravity * gm_t * displacement_mass;
}

SeakeepingParams compute_params(const HullForm& hull, const WaveState& wave, double speed,
                                double chi, double gravity, double water_density) {
  if (!(hull.length > 0 && hull.breadth > 0 && hull.draft > 0 && hull.displacement_mass > 0)) {
    throw ConfigError("hull form dimensions must be positive");
  }
  if (!(hull.gm_t > 0.0)) throw ConfigError("roll response needs a positive GM_T");

  const double w = wave.frequency;
  const double k = wave.wave_number;
  const double signed_encounter = w - k * speed * std::cos(chi);
  if (!(signed_encounter > 0.0)) {
    throw UnsupportedRegime("encounter frequency " + std::to_string(signed_encounter) +
                            " rad/s: ship overtakes or rides the waves");
  }

  SeakeepingParams p;
  p.amplitude = wave.amplitude;
  p.encounter_frequency = signed_encounter;
  p.alpha = signed_encounter / w;

  const double b = hull.breadth;
  const double t = hull.draft;
  const double len = hull.length;
  const double a2 = p.alpha * p.alpha;
  const double a3 = a2 * p.alpha;

  p.sectional_damping = 2.0 * std::sin(0.5 * k * b * a2) * std::exp(-k * t * a2);
  const double aa = p.sectional_damping * p.sectional_damping;
  const double f = std::hypot(1.0 - k * t, aa / (k * b * a3));
  const double ke = std::abs(k * std::cos(chi));
  const double kappa = std::exp(-ke * t);
  const double x = 0.5 * ke * len;
  p.forcing_heave = kappa * f * sinc(x);
  if (x < 1e-3) {
    p.forcing_pitch = kappa * f * ke * (1.0 - x * x / 10.0);
  } else {
    p.forcing_pitch =
        kappa * f * 24.0 / (ke * len * ke * len * len) * (std::sin(x) - x * std::cos(x));
  }
  p.inertia_coeff = 2.0 * k * t / (w * w);
  p.damping_coeff = aa / (k * b * a3 * w);

  p.gm_t = hull.gm_t;
  p.displacement_mass = hull.displacement_mass;
  p.restoring = restoring_coefficient(gravity, hull.gm_t, hull.displacement_mass);
  p.roll_natural_period = hull.roll_period > 0.0
                              ? hull.roll_period
                              : kTwoPi * 0.4 * b / std::sqrt(gravity * hull.gm_t);
  p.roll_damping = hull.roll_damping.value_or(2.0 * hull.roll_damping_ratio * p.restoring *
                                              p.roll_natural_period / kTwoPi);
  p.roll_moment = hull.roll_moment.value_or(
      std::sin(chi) * gravity *
      std::sqrt(water_density * p.roll_damping * len / p.encounter_frequency));
  return p;
}

double steady_amplitude(double inertia, double damping, double forcing, double frequency) {
  const double s = 1.0 - inertia * frequency * frequency;
  const double d = damping * frequency;
  return std::abs(forcing) / std::sqrt(s * s + d * d);
}

SeakeepingState step_seakeeping(const SeakeepingState& s, const SeakeepingParams& p, double dt) {
  if (!(dt > 0.0 && dt <= 0.5)) throw Error("seakeeping step must be in (0, 0.5] s");

  const double tn = p.roll_natural_period / kTwoPi;
  const Oscillator heave{p.inertia_coeff, p.damping_coeff, p.amplitude * p.forcing_heave};
  const Oscillator pitch{p.inertia_coeff, p.damping_coeff, p.amplitude * p.forcing_pitch};
  const Oscillator roll{tn * tn, p.roll_damping / p.restoring,
                        p.roll_moment * p.amplitude / p.restoring};
  const double we = p.encounter_frequency;

  struct Deriv {
    double h, hd, th, thd, ph, phd;
  };
  // The phase advances linearly, so its stage values are exact.
  auto eval = [&](const Deriv& x, double tau) {
    const double phase = s.phase + we * tau;
    const double c = std::cos(phase);
    const double sn = std::sin(phase);
    return Deriv{x.hd,  accel(heave, x.h, x.hd, c),   x.thd,
                 accel(pitch, x.th, x.thd, sn), x.phd, accel(roll, x.ph, x.phd, c)};
  };
  auto add = [](const Deriv& x, const Deriv& d, double h) {
    return Deriv{x.h + h * d.h,   x.hd + h * d.hd, x.th + h * d.th,
                 x.thd + h * d.thd, x.ph + h * d.ph, x.phd + h * d.phd};
  };

  const Deriv x0{s.heave, s.heave_rate, s.pitch, s.pitch_rate, s.roll, s.roll_rate};
  const double half = 0.5 * dt;
  const Deriv k1 = eval(x0, 0.0);
  const Deriv k2 = eval(add(x0, k1, half), half);
  const Deriv k3 = eval(add(x0, k2, half), half);
  const Deriv k4 = eval(add(x0, k3, dt), dt);
  const double w6 = dt / 6.0;
  auto comb = [&](double base, double a, double b, double c, double d) {
    return base + w6 * (a + 2.0 * b + 2.0 * c + d);
  };

  SeakeepingState out;
  out.heave = comb(s.heave, k1.h, k2.h, k3.h, k4.h);
  out.heave_rate = comb(s.heave_rate, k1.hd, k2.hd, k3.hd, k4.hd);
  out.pitch = comb(s.pitch, k1.th, k2.th, k3.th, k4.th);
  out.pitch_rate = comb(s.pitch_rate, k1.thd, k2.thd, k3.thd, k4.thd);
  out.roll = comb(s.roll, k1.ph, k2.ph, k3.ph, k4.ph);
  out.roll_rate = comb(s.roll_rate, k1.phd, k2.phd, k3.phd, k4.phd);
  out.phase = wrap_two_pi(s.phase + we * dt);
  return out;
}

SteadyResponse steady_response(const SeakeepingParams& p) {
  const double tn = p.roll_natural_period / kTwoPi;
  const double we = p.encounter_frequency;
  return {steady_amplitude(p.inertia_coeff, p.damping_coeff, p.amplitude * p.forcing_heave, we),
          steady_amplitude(p.inertia_coeff, p.damping_coeff, p.amplitude * p.forcing_pitch, we),
          steady_amplitude(tn * tn, p.roll_damping / p.restoring,
                           p.roll_moment * p.amplitude / p.restoring, we)};
}

}  // namespace harbour::seakeeping
