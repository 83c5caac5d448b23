#include "fidmag/physics.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fidmag/errors.hpp"

namespace fidmag {
namespace {

constexpr double kNullTarget = kTwoPi * 1e-3;

void check_field(double b) {
  if (!(std::isfinite(b) && b >= 0.0 && b < kFieldGuardT)) {
    fail(ErrorKind::kRange, "field " + std::to_string(b) + " T outside [0, 0.1) T");
  }
}

bool active(const MicrowaveDressing& d) {
  return d.enabled && d.rabi_frequency != 0.0;
}

double dimensionless_field(const AtomicSpecies& s, double b) {
  return (s.g_j - s.g_i) * s.mu_b * b / s.e_hfs;
}

struct Roots {
  double a;   // 4x/(2I+1)
  double sp;  // s_{+1}
  double s0;
  double sm;  // s_{-1}
};

Roots roots(const AtomicSpecies& s, double b) {
  const double x = dimensionless_field(s, b);
  const double a = 4.0 * x / (2.0 * s.nuclear_spin + 1.0);
  const double x2 = x * x;
  return {a, std::sqrt(1.0 + a + x2), std::sqrt(1.0 + x2),
          std::sqrt(1.0 - a + x2)};
}

// Detuning of the |1,m> <-> |2,m> transition seen by the microwave:
// Delta - [(E2m-E20) - (E1m-E10)]/hbar = Delta - E_hfs (s_m - s_0)/hbar.
double sigma_detuning(const AtomicSpecies& s, const MicrowaveDressing& d,
                      const Roots& r, int m) {
  if (m == 0) return d.detuning;
  const double sm = m > 0 ? r.sp : r.sm;
  const double diff = m * r.a / (sm + r.s0);
  return d.detuning - s.e_hfs * diff / s.hbar;
}

double shift_from(const AtomicSpecies& s, const MicrowaveDressing& d,
                  const Roots& r, int m) {
  const double den = sigma_detuning(s, d, r, m);
  if (std::abs(den) < kResonanceTolRad) {
    fail(ErrorKind::kSingularity,
         "microwave dressing resonant with m=" + std::to_string(m) +
             " transition (detuning " + std::to_string(den / kTwoPi) + " Hz)");
  }
  return -d.rabi_frequency * d.rabi_frequency / (4.0 * den);
}

double bare_gamma(const AtomicSpecies& s, const Roots& r) {
  const double n = 2.0 * s.nuclear_spin + 1.0;
  return s.mu_b * (-2.0 * s.g_i + 4.0 * (s.g_j - s.g_i) / (n * (r.sp + r.sm))) /
         (2.0 * s.hbar);
}

double bare_quadratic(const AtomicSpecies& s, const Roots& r) {
  // s+ + s- - 2 s0 = -2a^2 / ((s+ + s0)(s- + s0)(s+ + s-)), no cancellation.
  const double den = (r.sp + r.s0) * (r.sm + r.s0) * (r.sp + r.sm);
  return s.e_hfs * r.a * r.a / (2.0 * s.hbar * den);
}

double bisect(const auto& f, double lo, double hi, double tol, int max_iter) {
  double flo = f(lo);
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) < tol) return mid;
    if (mid <= lo || mid >= hi) return std::abs(fm) < std::abs(flo) ? mid : lo;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  fail(ErrorKind::kNumeric, "bisection did not converge in " +
                                std::to_string(max_iter) + " iterations");
}

// Field where the sigma detuning of `m` equals `target` (it is monotone in B).
std::optional<double> field_at_detuning(const AtomicSpecies& s,
                                        const MicrowaveDressing& d, int m,
                                        double target) {
  auto g = [&](double b) { return sigma_detuning(s, d, roots(s, b), m) - target; };
  const double hi = std::nextafter(kFieldGuardT, 0.0);
  const double glo = g(0.0);
  const double ghi = g(hi);
  if ((glo < 0.0) == (ghi < 0.0)) return std::nullopt;
  double lo = 0.0;
  double up = hi;
  for (int i = 0; i < 200 && up - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + up);
    if ((g(mid) < 0.0) == (glo < 0.0)) {
      lo = mid;
    } else {
      up = mid;
    }
  }
  return 0.5 * (lo + up);
}

}  // namespace

void validate(const MicrowaveDressing& d) {
  require(std::isfinite(d.rabi_frequency) && d.rabi_frequency >= 0.0,
          ErrorKind::kValidation, "dressing: Rabi frequency must be >= 0");
  require(std::isfinite(d.detuning), ErrorKind::kValidation,
          "dressing: detuning must be finite");
  require(!d.enabled || d.detuning != 0.0, ErrorKind::kValidation,
          "dressing: enabled dressing needs a nonzero detuning");
}

double breit_rabi_energy(const AtomicSpecies& s, int f, int m, double b) {
  require((f == 1 || f == 2) && std::abs(m) <= 1, ErrorKind::kDomain,
          "breit_rabi_energy: (F, m) = (" + std::to_string(f) + ", " +
              std::to_string(m) + ") not supported");
  check_field(b);
  const double n = 2.0 * s.nuclear_spin + 1.0;
  const double x = dimensionless_field(s, b);
  const double root = std::sqrt(1.0 + 4.0 * m * x / n + x * x);
  const double sign = f == 2 ? 1.0 : -1.0;
  return -s.e_hfs / (2.0 * n) + s.g_i * s.mu_b * m * b +
         sign * 0.5 * s.e_hfs * root;
}

LevelEnergies level_energies(const AtomicSpecies& s, double b,
                             const MicrowaveDressing& dressing) {
  validate(dressing);
  LevelEnergies out;
  for (int f = 1; f <= 2; ++f) {
    for (int m = -1; m <= 1; ++m) out.e[f - 1][m + 1] = breit_rabi_energy(s, f, m, b);
  }
  if (active(dressing)) {
    out.dressed = true;
    for (int m = -1; m <= 1; ++m) {
      out.e[0][m + 1] += s.hbar * mw_ac_zeeman_shift(s, dressing, b, m);
    }
  }
  return out;
}

double mw_ac_zeeman_shift(const AtomicSpecies& s, const MicrowaveDressing& d,
                          double b, int m) {
  validate(d);
  require(d.enabled, ErrorKind::kDomain, "mw_ac_zeeman_shift: dressing disabled");
  require(std::abs(m) <= 1, ErrorKind::kDomain, "mw_ac_zeeman_shift: |m| > 1");
  check_field(b);
  if (d.rabi_frequency == 0.0) return 0.0;
  return shift_from(s, d, roots(s, b), m);
}

double larmor_frequency(const AtomicSpecies& s, double b,
                        const MicrowaveDressing& dressing) {
  check_field(b);
  validate(dressing);
  const Roots r = roots(s, b);
  const double bare = bare_gamma(s, r) * b;
  if (!active(dressing)) return bare;
  const double qp = shift_from(s, dressing, r, 1);
  const double qm = shift_from(s, dressing, r, -1);
  return bare + 0.5 * (qm - qp);
}

double quadratic_shift(const AtomicSpecies& s, double b,
                       const MicrowaveDressing& dressing) {
  check_field(b);
  validate(dressing);
  const Roots r = roots(s, b);
  const double bare = bare_quadratic(s, r);
  if (!active(dressing)) return bare;
  const double qp = shift_from(s, dressing, r, 1);
  const double q0 = shift_from(s, dressing, r, 0);
  const double qm = shift_from(s, dressing, r, -1);
  return bare + 0.5 * (qp + qm - 2.0 * q0);
}

double running_gamma(const AtomicSpecies& s, double b,
                     const MicrowaveDressing& dressing) {
  require(b > 0.0, ErrorKind::kDomain, "running_gamma: B must be > 0");
  check_field(b);
  validate(dressing);
  if (!active(dressing)) return bare_gamma(s, roots(s, b));
  return larmor_frequency(s, b, dressing) / b;
}

double invert_field(const AtomicSpecies& s, double omega,
                    const MicrowaveDressing& dressing, double tol) {
  validate(dressing);
  require(std::isfinite(omega), ErrorKind::kRange, "invert_field: omega not finite");
  require(tol > 0.0, ErrorKind::kDomain, "invert_field: tol must be > 0");
  if (omega == 0.0) return 0.0;

  // Monotone branches: [0, guard) undressed; with dressing, the interval is
  // split around the sigma resonance, excluding |detuning| < 10 Omega.
  std::vector<std::pair<double, double>> branches;
  const double top = std::nextafter(kFieldGuardT, 0.0);
  if (!active(dressing)) {
    branches.emplace_back(0.0, top);
  } else {
    const int m = dressing.detuning > 0.0 ? 1 : -1;
    const double margin = 10.0 * dressing.rabi_frequency;
    const double sign = dressing.detuning > 0.0 ? 1.0 : -1.0;
    const auto near = field_at_detuning(s, dressing, m, sign * margin);
    const auto far = field_at_detuning(s, dressing, m, -sign * margin);
    if (!near) {
      branches.emplace_back(0.0, top);
    } else {
      if (std::abs(dressing.detuning) > margin) branches.emplace_back(0.0, *near);
      if (far) branches.emplace_back(*far, top);
    }
  }

  for (const auto& [lo, hi] : branches) {
    const double wlo = larmor_frequency(s, lo, dressing);
    const double whi = larmor_frequency(s, hi, dressing);
    if (omega < std::min(wlo, whi) || omega > std::max(wlo, whi)) continue;
    auto f = [&](double b) { return larmor_frequency(s, b, dressing) - omega; };
    return bisect(f, lo, hi, tol, 200);
  }
  fail(ErrorKind::kRange, "invert_field: omega/2pi = " +
                              std::to_string(omega / kTwoPi) +
                              " Hz outside every monotone branch");
}

MicrowaveDressing null_quadratic(const AtomicSpecies& s, double b,
                                 MicrowaveDressing tmpl, NullParameter free_param) {
  check_field(b);
  tmpl.enabled = true;
  auto q_of = [&](const MicrowaveDressing& d) { return quadratic_shift(s, b, d); };

  if (free_param == NullParameter::kRabi) {
    require(tmpl.detuning != 0.0, ErrorKind::kValidation,
            "null_quadratic: detuning must be set when solving for Omega");
    MicrowaveDressing d = tmpl;
    d.rabi_frequency = 0.0;
    if (std::abs(q_of(d)) < kNullTarget) return d;
    // Keep Omega inside the dispersive regime of the nearest transition.
    double dmin = std::abs(tmpl.detuning);
    const Roots r = roots(s, b);
    for (int m : {-1, 1}) dmin = std::min(dmin, std::abs(sigma_detuning(s, tmpl, r, m)));
    const double hi = 0.5 * dmin;
    auto f = [&](double omega_r) {
      MicrowaveDressing t = tmpl;
      t.rabi_frequency = omega_r;
      return q_of(t);
    };
    if ((f(0.0) < 0.0) == (f(hi) < 0.0)) {
      fail(ErrorKind::kInfeasible,
           "null_quadratic: no sign change of q for Omega in [0, " +
               std::to_string(hi / kTwoPi) + "] Hz at this detuning");
    }
    d.rabi_frequency = bisect(f, 0.0, hi, kNullTarget, 200);
    return d;
  }

  require(tmpl.rabi_frequency > 0.0, ErrorKind::kValidation,
          "null_quadratic: Omega must be set when solving for detuning");
  const double sign = tmpl.detuning < 0.0 ? -1.0 : 1.0;
  auto f = [&](double det) {
    MicrowaveDressing t = tmpl;
    t.detuning = det;
    return q_of(t);
  };
  auto safe = [&](double det) -> std::optional<double> {
    try {
      return f(det);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kSingularity) return std::nullopt;
      throw;
    }
  };
  // Log-spaced scan of |Delta| keeping the template sign; a bracket must not
  // straddle a sigma resonance.
  const Roots r = roots(s, b);
  auto resonance_side = [&](double det) {
    MicrowaveDressing t = tmpl;
    t.detuning = det;
    return std::array<bool, 2>{sigma_detuning(s, t, r, -1) > 0.0,
                               sigma_detuning(s, t, r, 1) > 0.0};
  };
  const int steps = 400;
  const double lo_abs = std::max(kTwoPi * 1e3, 10.0 * tmpl.rabi_frequency);
  const double hi_abs = kTwoPi * 1e8;
  double prev_det = sign * lo_abs;
  auto prev_q = safe(prev_det);
  for (int i = 1; i <= steps; ++i) {
    const double det = sign * lo_abs * std::pow(hi_abs / lo_abs, double(i) / steps);
    const auto q = safe(det);
    if (q && prev_q && (*q < 0.0) != (*prev_q < 0.0) &&
        resonance_side(det) == resonance_side(prev_det)) {
      MicrowaveDressing d = tmpl;
      d.detuning = bisect(f, std::min(prev_det, det), std::max(prev_det, det),
                          kNullTarget, 200);
      return d;
    }
    prev_det = det;
    prev_q = q;
  }
  fail(ErrorKind::kInfeasible,
       "null_quadratic: no detuning with the template sign nulls q");
}

}  // namespace fidmag
