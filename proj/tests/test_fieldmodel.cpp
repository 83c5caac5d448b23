#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fidmag/errors.hpp"
#include "fidmag/fieldmodel.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/spectrum.hpp"

using namespace fidmag;

namespace {

double rms_about_mean(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("laboratory harmonics add in quadrature to ~44 nT") {
  const auto hs = laboratory_harmonics();
  REQUIRE(hs.size() == 3);
  double ss = 0.0;
  for (const auto& h : hs) ss += h.rms_t * h.rms_t;
  CHECK(std::sqrt(ss) == doctest::Approx(43.355e-9).epsilon(1e-4));
  CHECK(harmonic_order(150.0, 50.0) == 3);
  CHECK(harmonic_order(250.3, 50.1) == 5);
}

TEST_CASE("white field noise has the requested one-sided density") {
  FieldModel m;
  m.b0_t = 10e-6;
  m.white_asd_t_rthz = 100e-12;
  m.seed = 11;
  const double fs = 10e3;
  const auto tr = sample_field_trace(m, fs, 20.0);
  CHECK(tr.samples.size() == 200000);
  // variance S fs / 2
  CHECK(rms_about_mean(tr.samples) ==
        doctest::Approx(100e-12 * std::sqrt(fs / 2.0)).epsilon(0.01));
  const auto psd = power_spectrum(tr.samples, fs, 5.0);
  CHECK(psd.band_mean(100.0, 4000.0) == doctest::Approx(1e-20).epsilon(0.03));
}

TEST_CASE("single harmonic has the requested rms and phase") {
  FieldModel m;
  m.harmonics = {{50.0, 10e-9, 0.7}};
  const double fs = 20e3;
  const auto tr = sample_field_trace(m, fs, 1.0);
  CHECK(rms_about_mean(tr.samples) == doctest::Approx(10e-9).epsilon(1e-6));
  CHECK(tr.samples[0] == doctest::Approx(std::sqrt(2.0) * 10e-9 * std::sin(0.7)));
  CHECK(harmonic_field(m, 0.0123) ==
        doctest::Approx(std::sqrt(2.0) * 10e-9 * std::sin(kTwoPi * 50.0 * 0.0123 + 0.7)));
}

TEST_CASE("grid drift scales with harmonic order") {
  FieldModel m;
  m.line_drift_hz = 0.1;
  m.harmonics = {{250.0, 1e-9, 0.0}};
  // 250 Hz is the 5th harmonic, so it runs at 250.5 Hz
  const double t = 0.9;
  CHECK(harmonic_field(m, t) ==
        doctest::Approx(std::sqrt(2.0) * 1e-9 * std::sin(kTwoPi * 250.5 * t)));
}

TEST_CASE("traces are reproducible from the seed") {
  FieldModel m;
  m.white_asd_t_rthz = 1e-10;
  m.seed = 99;
  const auto a = sample_field_trace(m, 1e4, 0.1);
  const auto b = sample_field_trace(m, 1e4, 0.1);
  CHECK(a.samples == b.samples);
  CHECK(a.model_hash == b.model_hash);
  m.seed = 100;
  CHECK(sample_field_trace(m, 1e4, 0.1).samples != a.samples);
}

TEST_CASE("aliasing harmonics are rejected") {
  FieldModel m;
  m.harmonics = {{250.0, 1e-9, 0.0}};
  CHECK_THROWS_AS(sample_field_trace(m, 400.0, 1.0), Error);
  m.harmonics = {{-5.0, 1e-9, 0.0}};
  CHECK_THROWS_AS(validate(m), Error);
}

TEST_CASE("ideal compensation cancels the interference exactly") {
  FieldModel m;
  m.harmonics = laboratory_harmonics();
  CompensationField c;
  c.harmonics = m.harmonics;
  c.actuator_dynamics = false;
  const double fs = 50e3;
  const auto src = sample_field_trace(m, fs, 0.5);
  const auto comp = compensation_waveform(c, fs, 0.5);
  const auto sum = add_traces(src, comp);
  double worst = 0.0;
  for (double v : sum.samples) worst = std::max(worst, std::abs(v));
  CHECK(worst < 1e-15);
}

TEST_CASE("retriggered waveform repeats every drifted line period") {
  CompensationField c;
  c.harmonics = {{50.0, 5e-9, 0.2}, {150.0, 2e-9, 1.0}};
  c.line_drift_hz = 0.1;
  c.actuator_dynamics = false;
  const double fs = 50.1 * 1000.0;  // 1000 samples per drifted cycle
  const auto w = compensation_waveform(c, fs, 0.2);
  for (std::size_t i = 0; i + 1000 < w.samples.size(); i += 37) {
    CHECK(w.samples[i] == doctest::Approx(w.samples[i + 1000]).epsilon(1e-9));
  }
}

TEST_CASE("actuator is a single-pole low-pass with the configured time constant") {
  CompensationField c;
  c.time_constant_s = 40e-6;
  const double fs = 5e6;
  FieldTrace step;
  step.fs_hz = fs;
  step.samples.assign(5000, 1e-6);
  const auto y = apply_actuator(step, c);
  const auto at = static_cast<std::size_t>(std::llround(c.time_constant_s * fs));
  // bilinear-transform step response reaches 1 - 1/e at t = tau
  CHECK(y.samples[at] / 1e-6 == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(2e-3));
  CHECK(y.samples.back() / 1e-6 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("actuator clips at its maximum amplitude") {
  CompensationField c;
  c.max_amplitude_t = 1e-6;
  c.harmonics = {{50.0, 2e-6, 0.0}};
  const auto w = compensation_waveform(c, 10e3, 0.1);
  CHECK(w.clipped_samples > 0);
  for (double v : w.samples) CHECK(std::abs(v) <= 1e-6);
}
