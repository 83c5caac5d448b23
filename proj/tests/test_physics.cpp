#include <doctest.h>

#include <cmath>
#include <random>

#include "fidmag/errors.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/species.hpp"

using namespace fidmag;

namespace {

const AtomicSpecies& rb() { return rubidium87(); }

MicrowaveDressing lab_dressing(double rabi_hz = 6e3, double detuning_hz = -150e3) {
  return {kTwoPi * rabi_hz, kTwoPi * detuning_hz, true};
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("zero-field energies split by the hyperfine interval") {
  const auto& s = rb();
  for (int m = -1; m <= 1; ++m) {
    const double split = breit_rabi_energy(s, 2, m, 0.0) - breit_rabi_energy(s, 1, m, 0.0);
    CHECK(split == doctest::Approx(s.e_hfs).epsilon(1e-14));
  }
  CHECK(larmor_frequency(s, 0.0) == 0.0);
  CHECK(quadratic_shift(s, 0.0) == 0.0);
}

TEST_CASE("Larmor frequency equals the Breit-Rabi level difference") {
  const auto& s = rb();
  for (double b : {1e-6, 86.0121261e-6, 1e-3, 1e-2}) {
    const double direct =
        (breit_rabi_energy(s, 1, -1, b) - breit_rabi_energy(s, 1, 1, b)) / (2.0 * s.hbar);
    CHECK(larmor_frequency(s, b) == doctest::Approx(direct).epsilon(1e-9));
    const double q = (breit_rabi_energy(s, 1, 1, b) + breit_rabi_energy(s, 1, -1, b) -
                      2.0 * breit_rabi_energy(s, 1, 0, b)) /
                     (2.0 * s.hbar);
    if (b >= 1e-3) CHECK(quadratic_shift(s, b) == doctest::Approx(q).epsilon(1e-6));
  }
}

TEST_CASE("low-field expansion: gamma to 1e-5, q to 1e-3") {
  const auto& s = rb();
  CHECK(running_gamma(s, 1e-9) == doctest::Approx(s.gamma0).epsilon(1e-5));
  CHECK(running_gamma(s, 1e-7) == doctest::Approx(s.gamma0).epsilon(1e-5));
  const double b = 1e-6;
  CHECK(quadratic_shift(s, b) / (b * b) == doctest::Approx(s.q0).epsilon(1e-3));
}

TEST_CASE("bias-field operating point") {
  const auto& s = rb();
  const double b = 86.0121261e-6;
  CHECK(larmor_frequency(s, b) / kTwoPi == doctest::Approx(604.1e3).epsilon(1e-4));
  CHECK(quadratic_shift(s, b) / kTwoPi == doctest::Approx(s.q0 * b * b / kTwoPi).epsilon(1e-3));
}

TEST_CASE("microwave ac Zeeman shift of the clock level") {
  const auto& s = rb();
  const MicrowaveDressing d{kTwoPi * 6e3, kTwoPi * 150e3, true};
  // -Omega^2 / (4 Delta) = -(6 kHz)^2 / 600 kHz = -60 Hz
  CHECK(mw_ac_zeeman_shift(s, d, 86e-6, 0) / kTwoPi == doctest::Approx(-60.0).epsilon(1e-12));
  CHECK(kind_of([&] { mw_ac_zeeman_shift(s, MicrowaveDressing{}, 86e-6, 0); }) ==
        ErrorKind::kDomain);
}

TEST_CASE("zero Rabi frequency reproduces the undressed model bit for bit") {
  const auto& s = rb();
  const MicrowaveDressing off{0.0, kTwoPi * -150e3, true};
  for (double b : {1e-6, 86e-6, 5e-4}) {
    CHECK(larmor_frequency(s, b, off) == larmor_frequency(s, b));
    CHECK(quadratic_shift(s, b, off) == quadratic_shift(s, b));
  }
}

TEST_CASE("null_quadratic removes the quadratic shift at the bias field") {
  const auto& s = rb();
  const double b = 86.0121261e-6;
  SUBCASE("solve for the Rabi frequency") {
    const auto d = null_quadratic(s, b, lab_dressing(0.0), NullParameter::kRabi);
    CHECK(std::abs(quadratic_shift(s, b, d)) < kTwoPi * 0.1);
    CHECK(d.rabi_frequency / kTwoPi == doctest::Approx(5.6e3).epsilon(0.01));
  }
  SUBCASE("solve for the detuning") {
    const auto d = null_quadratic(s, b, lab_dressing(5605.0, -100e3), NullParameter::kDetuning);
    CHECK(std::abs(quadratic_shift(s, b, d)) < kTwoPi * 0.1);
    CHECK(d.detuning / kTwoPi == doctest::Approx(-150e3).epsilon(0.01));
  }
}

TEST_CASE("invert_field round trip") {
  const auto& s = rb();
  const auto dressed = null_quadratic(s, 86.0121261e-6, lab_dressing(0.0), NullParameter::kRabi);
  for (const MicrowaveDressing& d : {MicrowaveDressing{}, dressed}) {
    for (double b : {30e-6, 86.0121261e-6, 500e-6}) {
      const double w = larmor_frequency(s, b, d);
      const double back = invert_field(s, w, d);
      // tolerance 2 pi x 1e-4 rad/s in omega
      CHECK(std::abs(back - b) * running_gamma(s, b, d) < kTwoPi * 2e-4);
    }
  }
  CHECK(invert_field(s, 0.0) == 0.0);
  CHECK(invert_field(s, larmor_frequency(s, 1e-6)) == doctest::Approx(1e-6).epsilon(1e-9));
}

TEST_CASE("Larmor frequency is monotone on each dressing branch") {
  const auto& s = rb();
  const auto d = lab_dressing();
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(20e-6, 1e-3);
  std::uniform_real_distribution<double> u0(0.0, 1e-3);
  for (int i = 0; i < 2000; ++i) {
    double a = u(eng), b = u(eng);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    CHECK(larmor_frequency(s, a, d) < larmor_frequency(s, b, d));
    double c = u0(eng), e = u0(eng);
    if (c > e) std::swap(c, e);
    if (c == e) continue;
    CHECK(larmor_frequency(s, c) < larmor_frequency(s, e));
  }
}

TEST_CASE("physics errors") {
  const auto& s = rb();
  CHECK(kind_of([&] { larmor_frequency(s, -1e-9); }) == ErrorKind::kRange);
  CHECK(kind_of([&] { larmor_frequency(s, 0.1); }) == ErrorKind::kRange);
  CHECK(kind_of([&] { running_gamma(s, 0.0); }) == ErrorKind::kDomain);
  CHECK(kind_of([&] { invert_field(s, kTwoPi * 5e9); }) == ErrorKind::kRange);
  CHECK(kind_of([&] { validate(MicrowaveDressing{kTwoPi, 0.0, true}); }) ==
        ErrorKind::kValidation);
  // The m=-1 sigma transition comes into resonance near 10.7 uT at -150 kHz.
  const auto d = lab_dressing();
  bool hit = false;
  for (double b = 10.0e-6; b < 11.5e-6 && !hit; b += 1e-10) {
    try {
      larmor_frequency(s, b, d);
    } catch (const Error& e) {
      hit = e.kind() == ErrorKind::kSingularity;
    }
  }
  CHECK(hit);
}
