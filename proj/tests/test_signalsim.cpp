#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "fidmag/errors.hpp"
#include "fidmag/estimation.hpp"
#include "fidmag/fidr_io.hpp"
#include "fidmag/fieldmodel.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/signalsim.hpp"
#include "fidmag/species.hpp"

using namespace fidmag;

namespace {

PhaseSeries constant_field_phase(double b, double fs, double duration) {
  FieldModel m;
  m.b0_t = b;
  return integrate_larmor_phase(sample_field_trace(m, fs, duration), rubidium87());
}

double stdev(std::span<const double> v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("constant field integrates to a linear phase") {
  const double b = 8.5e-6, fs = 5e5;
  const auto p = constant_field_phase(b, fs, 0.1);
  const double w = larmor_frequency(rubidium87(), b);
  CHECK(p.phase[0] == 0.0);
  for (std::size_t i : {1ul, 1000ul, p.phase.size() - 1}) {
    CHECK(p.phase[i] == doctest::Approx(w * static_cast<double>(i) / fs).epsilon(1e-12));
  }
}

TEST_CASE("phase integral of a sinusoidal field matches the closed form") {
  // phi(t) = omega0 t + gamma sqrt2 a (1 - cos 2 pi f t) / (2 pi f), q neglected
  const auto& s = rubidium87();
  FieldModel m;
  m.b0_t = 1e-6;
  m.harmonics = {{50.0, 20e-9, 0.0}};
  const double fs = 1e5;
  const auto p = integrate_larmor_phase(sample_field_trace(m, fs, 0.1), s);
  const double w0 = larmor_frequency(s, m.b0_t);
  const double g = (larmor_frequency(s, 1.001e-6) - larmor_frequency(s, 0.999e-6)) / 2e-9;
  for (std::size_t i = 100; i < p.phase.size(); i += 997) {
    const double t = static_cast<double>(i) / fs;
    const double expect =
        w0 * t + g * std::sqrt(2.0) * 20e-9 * (1.0 - std::cos(kTwoPi * 50.0 * t)) / (kTwoPi * 50.0);
    CHECK(p.phase[i] == doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("noiseless float record is the decaying sinusoid") {
  const auto p = constant_field_phase(8.5e-6, 5e5, 0.2);
  SynthesisOptions o;
  o.bit_depth = 0;
  o.phi0_rad = 0.4;
  const DecayModel d{2.0, 0.5};
  const auto r = synthesize_polarimeter_record(p, d, o);
  CHECK(r.segments.probe_on == 25000);
  CHECK(r.segments.fid == 50000);
  CHECK(r.fid_length() == p.phase.size());
  CHECK(r.codes.empty());
  for (std::size_t i = 0; i < r.segments.fid; ++i) REQUIRE(r.volts[i] == 0.0);
  for (std::size_t i = 0; i < p.phase.size(); i += 1234) {
    const double t = static_cast<double>(i) / 5e5;
    CHECK(r.volts[r.segments.fid + i] ==
          doctest::Approx(2.0 * std::exp(-t / 0.5) * std::sin(p.phase[i] + 0.4)));
  }
}

TEST_CASE("noise levels in the pre-tip segments") {
  const auto p = constant_field_phase(8.5e-6, 5e5, 0.1);
  SynthesisOptions o;
  o.sigma_v = sigma_for_snr(1.0, db_to_ratio(-3.0));
  o.bit_depth = 0;
  o.noise_seed = 3;
  const auto r = synthesize_polarimeter_record(p, DecayModel{}, o);
  const std::span<const double> v(r.volts);
  CHECK(stdev(v.subspan(r.segments.probe_on, r.segments.fid - r.segments.probe_on)) ==
        doctest::Approx(o.sigma_v).epsilon(0.02));
  CHECK(stdev(v.subspan(0, r.segments.probe_on)) ==
        doctest::Approx(0.1 * o.sigma_v).epsilon(0.02));
  CHECK(r.meta.detector_sigma_v == doctest::Approx(0.1 * o.sigma_v));
}

TEST_CASE("full-bandwidth SNR convention") {
  CHECK(sigma_for_snr(2.0, 0.5) == doctest::Approx(2.0));
  const double a = 1.3, snr = 0.07;
  const double s = sigma_for_snr(a, snr);
  CHECK(a * a / (2.0 * s * s) == doctest::Approx(snr));

  const auto p = constant_field_phase(8.5e-6, 5e5, 0.4);
  SynthesisOptions o;
  o.sigma_v = sigma_for_snr(1.0, db_to_ratio(-5.0));
  o.noise_seed = 8;
  const DecayModel d{1.0, 0.3};
  const auto r = synthesize_polarimeter_record(p, d, o);
  const auto series = full_bandwidth_snr(r, 0.02);
  REQUIRE(series.snr.size() == 20);
  for (std::size_t i = 1; i + 1 < series.snr.size(); i += 3) {
    const double expect = db_to_ratio(-5.0) * std::exp(-2.0 * series.time_s[i] / 0.3);
    CHECK(series.snr[i] == doctest::Approx(expect).epsilon(0.1));
  }
  SynthesisOptions none = o;
  none.probe_on_s = 0.0;
  const auto r2 = synthesize_polarimeter_record(p, d, none);
  CHECK_THROWS_AS(full_bandwidth_snr(r2, 0.02), Error);
}

TEST_CASE("quantiser: round to nearest, clamp, count clipped samples") {
  const auto p = constant_field_phase(8.5e-6, 5e5, 0.05);
  SynthesisOptions o;
  o.sigma_v = 0.2;
  o.bit_depth = 12;
  o.noise_seed = 4;
  o.full_scale_v = 1.0;
  const auto r = synthesize_polarimeter_record(p, DecayModel{}, o);
  CHECK(r.scale_v_per_code == doctest::Approx(1.0 / 2048.0));
  CHECK(r.meta.clipped_samples > 0);
  CHECK(r.meta.clip_warning);
  for (std::size_t i = 0; i < r.size(); ++i) {
    REQUIRE(r.codes[i] >= -2048);
    REQUIRE(r.codes[i] <= 2047);
    REQUIRE(r.volts[i] == r.codes[i] * r.scale_v_per_code);
  }
  o.bit_depth = 0;
  const auto f = synthesize_polarimeter_record(p, DecayModel{}, o);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r.codes[i] > -2048 && r.codes[i] < 2047) {
      ++inside;
      REQUIRE(std::abs(f.volts[i] - r.volts[i]) <= 0.5 * r.scale_v_per_code + 1e-15);
    }
  }
  CHECK(inside > r.size() / 2);
}

TEST_CASE("records are reproducible from the noise seed") {
  const auto p = constant_field_phase(8.5e-6, 5e5, 0.02);
  SynthesisOptions o;
  o.sigma_v = 0.3;
  o.noise_seed = 21;
  const auto a = synthesize_polarimeter_record(p, DecayModel{}, o);
  const auto b = synthesize_polarimeter_record(p, DecayModel{}, o);
  CHECK(a.codes == b.codes);
  o.noise_seed = 22;
  CHECK(synthesize_polarimeter_record(p, DecayModel{}, o).codes != a.codes);
}

TEST_CASE("FIDR round trip with JSON sidecar") {
  const auto dir = std::filesystem::temp_directory_path() / "fidmag_fidr_test";
  std::filesystem::create_directories(dir);
  const auto p = constant_field_phase(8.5e-6, 5e5, 0.02);
  SynthesisOptions o;
  o.sigma_v = 0.3;
  o.noise_seed = 5;
  o.phi0_rad = 1.25;
  for (int bits : {16, 24}) {
    o.bit_depth = bits;
    const auto r = synthesize_polarimeter_record(p, DecayModel{1.0, 0.53}, o);
    const auto path = dir / ("shot" + std::to_string(bits) + ".fidr");
    write_fidr(path, r);
    CHECK(std::filesystem::exists(sidecar_path(path)));
    const auto back = read_fidr(path);
    CHECK(back.codes == r.codes);
    CHECK(back.volts == r.volts);
    CHECK(back.fs_hz == r.fs_hz);
    CHECK(back.bit_depth == bits);
    CHECK(back.segments.fid == r.segments.fid);
    CHECK(back.segments.probe_on == r.segments.probe_on);
    CHECK(back.phi0_rad == r.phi0_rad);
    CHECK(back.meta.sigma_v == r.meta.sigma_v);
    CHECK(back.meta.lifetime_s == r.meta.lifetime_s);
  }
  o.bit_depth = 0;
  const auto flt = synthesize_polarimeter_record(p, DecayModel{}, o);
  CHECK_THROWS_AS(write_fidr(dir / "float.fidr", flt), Error);
  {
    std::ofstream bad(dir / "bad.fidr", std::ios::binary);
    bad << "NOPE and some bytes";
  }
  try {
    read_fidr(dir / "bad.fidr");
    FAIL("garbage accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
  std::filesystem::remove_all(dir);
}
