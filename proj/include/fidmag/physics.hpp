#pragma once

#include <array>
#include <numbers>

#include "fidmag/species.hpp"

namespace fidmag {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Fields at or above this are refused (x stays well below 1 for Rb-87).
inline constexpr double kFieldGuardT = 0.1;

/// Denominators of the microwave shifts smaller than this are a resonance.
inline constexpr double kResonanceTolRad = kTwoPi * 100.0;

/// Off-resonant microwave coupling of the clock transition. `detuning` is
/// signed, omega_mw - omega_clock; red detuning is negative.
struct MicrowaveDressing {
  double rabi_frequency = 0.0;  // rad/s
  double detuning = 0.0;        // rad/s
  bool enabled = false;
};

/// Throws kValidation when Omega < 0 or an enabled dressing has zero detuning.
void validate(const MicrowaveDressing& d);

/// E[F-1][m+1], in J.
struct LevelEnergies {
  std::array<std::array<double, 3>, 2> e{};
  bool dressed = false;

  double at(int f, int m) const { return e[f - 1][m + 1]; }
};

/// Breit-Rabi energy of |F, m> with F in {1, 2}, |m| <= 1.
double breit_rabi_energy(const AtomicSpecies& s, int f, int m, double b);

/// All six levels, optionally including the microwave shifts hbar*q_mw,m.
LevelEnergies level_energies(const AtomicSpecies& s, double b,
                             const MicrowaveDressing& dressing = {});

/// Microwave ac Zeeman shift of |1, m> in rad/s. m = 0 uses the clock
/// detuning; m = +-1 subtract the sigma-transition Zeeman offset.
double mw_ac_zeeman_shift(const AtomicSpecies& s, const MicrowaveDressing& d,
                          double b, int m);

/// Larmor frequency magnitude (E'_{1,-1} - E'_{1,+1}) / 2 hbar.
double larmor_frequency(const AtomicSpecies& s, double b,
                        const MicrowaveDressing& dressing = {});

/// (E'_{1,+1} + E'_{1,-1} - 2 E'_{1,0}) / 2 hbar.
double quadratic_shift(const AtomicSpecies& s, double b,
                       const MicrowaveDressing& dressing = {});

/// larmor_frequency(B)/B. Undressed it is evaluated in closed form so it is
/// finite at B -> 0+; B <= 0 is a domain error.
double running_gamma(const AtomicSpecies& s, double b,
                     const MicrowaveDressing& dressing = {});

/// Inverse of larmor_frequency by bisection on a monotone branch.
double invert_field(const AtomicSpecies& s, double omega,
                    const MicrowaveDressing& dressing = {},
                    double tol = kTwoPi * 1e-4);

enum class NullParameter { kRabi, kDetuning };

/// Adjusts one dressing parameter so the total quadratic shift at B is
/// below 2pi x 0.1 Hz. Throws kInfeasible when no sign change is bracketed.
MicrowaveDressing null_quadratic(const AtomicSpecies& s, double b,
                                 MicrowaveDressing dressing_template,
                                 NullParameter free_param);

}  // namespace fidmag
