#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include "fidmag/errors.hpp"
#include "fidmag/estimation.hpp"
#include "fidmag/fft.hpp"
#include "fidmag/fieldmodel.hpp"
#include "fidmag/filter.hpp"
#include "fidmag/hilbert.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/reconstruct.hpp"
#include "fidmag/signalsim.hpp"
#include "fidmag/species.hpp"
#include "fidmag/spectrum.hpp"

using namespace fidmag;

namespace {

std::vector<double> white(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> x(n);
  for (auto& v : x) v = g(eng);
  return x;
}

std::vector<double> tone(std::size_t n, double f, double fs, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(kTwoPi * f * static_cast<double>(i) / fs + phase);
  return x;
}

double variance(std::span<const double> x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

// Plain O(n^2) DFT bin, used as an oracle for the FFT-based code.
std::complex<double> dft_bin(std::span<const std::complex<double>> x, std::size_t k) {
  std::complex<double> acc = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += x[i] * std::polar(1.0, -kTwoPi * static_cast<double>(k * i % x.size()) / n);
  return acc;
}

}  // namespace

TEST_CASE("analytic signal keeps the input as its real part") {
  const auto x = white(3001, 1.0, 1);
  const auto a = analytic_signal(x, 1000.0);
  REQUIRE(a.samples.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(a.samples[i].real() == x[i]);
}

TEST_CASE("analytic signal of a tone is the complex exponential") {
  const double fs = 1000.0;
  const auto x = tone(4000, 50.0, fs);
  const auto a = analytic_signal(x, fs);
  for (std::size_t i = 200; i < 3800; ++i) {
    REQUIRE(a.samples[i].imag() ==
            doctest::Approx(-std::cos(kTwoPi * 50.0 * static_cast<double>(i) / fs)).epsilon(1e-9));
  }
  const auto env = a.envelope();
  CHECK(env[2000] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("analytic spectrum is one-sided") {
  const std::size_t n = 4096;  // already 7-smooth, so no padding
  CHECK(next_fast_size(n) == n);
  auto x = tone(n, 123.4, 1000.0, 0.3);
  const auto noise = white(n, 0.5, 2);
  for (std::size_t i = 0; i < n; ++i) x[i] += noise[i];
  const auto a = analytic_signal(x, 1000.0);
  const auto spec = fft::forward(a.samples);
  double peak = 0.0, neg = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double m = std::abs(spec[k]);
    peak = std::max(peak, m);
    if (k > n / 2) neg = std::max(neg, m);
  }
  CHECK(neg < 1e-12 * peak);
  // the library FFT agrees with a direct DFT
  for (std::size_t k : {3ul, 505ul, 3000ul})
    CHECK(std::abs(spec[k] - dft_bin(a.samples, k)) < 1e-8 * peak);
}

TEST_CASE("next_fast_size returns 7-smooth sizes") {
  CHECK(next_fast_size(1) == 1);
  CHECK(next_fast_size(11) == 12);
  CHECK(next_fast_size(1021) == 1024);
  for (std::size_t n : {97ul, 5001ul, 500003ul}) {
    std::size_t m = next_fast_size(n);
    CHECK(m >= n);
    for (std::size_t p : {2ul, 3ul, 5ul, 7ul})
      while (m % p == 0) m /= p;
    CHECK(m == 1);
  }
}

TEST_CASE("unwrap matches the 2 pi threshold rule") {
  std::vector<double> truth(2000), wrapped(2000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = 0.37 * static_cast<double>(i) + 0.2 * std::sin(0.01 * static_cast<double>(i));
    wrapped[i] = std::remainder(truth[i], kTwoPi);
  }
  const auto u = unwrap_phase(wrapped);
  CHECK_FALSE(u.discontinuous());
  CHECK(u.corrections > 0);
  for (std::size_t i = 0; i < truth.size(); ++i)
    REQUIRE(u.phase[i] - truth[i] == doctest::Approx(u.phase[0] - truth[0]).epsilon(1e-9));

  auto jumped = wrapped;
  for (std::size_t i = 1000; i < jumped.size(); ++i) jumped[i] = std::remainder(jumped[i] + 2.0, kTwoPi);
  const auto d = unwrap_phase(jumped);
  REQUIRE(d.discontinuous());
  CHECK(d.discontinuities.front() == 1000);
}

TEST_CASE("Butterworth bandpass: stable, unit centre gain, deep stop band") {
  const double fs = 5e5;
  const ButterworthBandpass f(band_around(60e3, 500.0), fs);
  CHECK(f.sections().size() == 6);
  for (const auto& p : f.poles()) CHECK(std::abs(p) < 1.0);
  CHECK(f.power_gain(60e3) == doctest::Approx(1.0).epsilon(1e-6));
  // forward-backward: -3 dB of the single pass becomes -6 dB at the edges
  CHECK(f.power_gain(60e3 - 250.0) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(f.power_gain(60e3 + 250.0) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(f.power_gain(55e3) < 1e-20);
  CHECK(f.edge_guard() >= 1000);
  CHECK(f.enbw_hz() > 300.0);
  CHECK(f.enbw_hz() < 500.0);
}

TEST_CASE("filter design errors") {
  auto spec = band_around(1000.0, 100.0);
  spec.prototype_order = 5;
  CHECK_THROWS_AS(ButterworthBandpass(spec, 1e4), Error);
  CHECK_THROWS_AS(ButterworthBandpass(band_around(4990.0, 100.0), 1e4), Error);
  const ButterworthBandpass f(band_around(1000.0, 10.0), 1e4);
  try {
    f.apply(std::vector<double>(50, 1.0));
    FAIL("short record accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEdge);
  }
}

TEST_CASE("zero-phase filtering has zero lag") {
  const double fs = 5e5;
  const std::size_t n = 100000;
  auto x = tone(n, 60e3, fs, 0.7);
  const auto noise = white(n, 1.0, 4);
  // band-limited noise riding on the tone so the correlation peak is sharp
  const auto nb = bandpass_zero_phase(noise, fs, band_around(60e3, 2000.0));
  for (std::size_t i = 0; i < n; ++i) x[i] += 5.0 * nb[i];
  const auto y = bandpass_zero_phase(x, fs, band_around(60e3, 5000.0));
  int best = 0;
  double best_c = -1e300;
  for (int lag = -20; lag <= 20; ++lag) {
    double c = 0.0;
    for (std::size_t i = 5000; i < n - 5000; ++i) c += x[i] * y[static_cast<std::size_t>(static_cast<long>(i) + lag)];
    if (c > best_c) {
      best_c = c;
      best = lag;
    }
  }
  CHECK(best == 0);
}

TEST_CASE("white noise through the 500 Hz band closes on the ENBW") {
  const double fs = 5e5, sigma = 1.3;
  const auto x = white(2000000, sigma, 5);
  const ButterworthBandpass f(band_around(60e3, 500.0), fs);
  const auto y = f.apply(x);
  const std::size_t g = f.edge_guard();
  const double v = variance(std::span<const double>(y).subspan(g, y.size() - 2 * g));
  CHECK(v == doctest::Approx(sigma * sigma * 2.0 * f.enbw_hz() / fs).epsilon(0.03));
}

TEST_CASE("Welch PSD: white level, tone power, Parseval") {
  const double fs = 1e4, sigma = 0.7;
  const auto x = white(400000, sigma, 6);
  const auto s = power_spectrum(x, fs, 10.0);
  CHECK(s.resolution_hz == doctest::Approx(10.0));
  CHECK(s.band_mean(100.0, 4900.0) == doctest::Approx(2.0 * sigma * sigma / fs).epsilon(0.02));
  CHECK(s.band_power(0.0, fs / 2) == doctest::Approx(variance(x)).epsilon(0.02));

  auto t = tone(400000, 1230.0, fs);
  for (auto& v : t) v *= 2.0;
  const auto st = power_spectrum(t, fs, 10.0);
  CHECK(st.band_power(1180.0, 1280.0) == doctest::Approx(2.0).epsilon(0.01));
  CHECK_THROWS_AS(power_spectrum(t, fs, 0.01), Error);
}

TEST_CASE("spectrogram ridge follows the carrier") {
  const double fs = 2e4;
  const auto x = tone(40000, 3000.0, fs);
  const auto sg = spectrogram(x, fs, 0.05);
  for (double f : sg.ridge(1000.0, 5000.0)) CHECK(std::abs(f - 3000.0) <= 20.0);

  // 50 Hz FM, +-1.25 kHz
  const double fs2 = 2e5;
  std::vector<double> fm(40000);
  const double dev = 1250.0, fmod = 50.0;
  for (std::size_t i = 0; i < fm.size(); ++i) {
    const double t = static_cast<double>(i) / fs2;
    fm[i] = std::sin(kTwoPi * 20000.0 * t + dev / fmod * (1.0 - std::cos(kTwoPi * fmod * t)));
  }
  const auto sf = spectrogram(fm, fs2, 0.004, 0.0005);
  const auto r = sf.ridge(15000.0, 25000.0);
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  CHECK(*hi - *lo == doctest::Approx(2.0 * dev).epsilon(0.25));
}

TEST_CASE("Carson bandwidth") {
  const double g = rubidium87().gamma0;
  const std::vector<Harmonic> one{{50.0, 41.92e-9, 0.0}};
  const double dev = g * std::sqrt(2.0) * 41.92e-9 / kTwoPi;
  CHECK(dev == doctest::Approx(416.4).epsilon(1e-3));
  CHECK(carson_bandwidth(one, g) == doctest::Approx(2.0 * (dev + 50.0)));
  CHECK(carson_bandwidth(one, g) == doctest::Approx(932.8).epsilon(1e-3));
  const auto lab = laboratory_harmonics();
  CHECK(carson_bandwidth(lab, g) == doctest::Approx(1588.7).epsilon(1e-3));
  CHECK(carson_bandwidth(std::vector<Harmonic>{{50.0, 0.0, 0.0}}, g) == doctest::Approx(100.0));
}

TEST_CASE("field_from_phase inverts a linear phase") {
  const double g = rubidium87().gamma0, fs = 1e4, b = 2e-6;
  std::vector<double> p(1000);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = g * b * static_cast<double>(i) / fs;
  for (double v : field_from_phase(p, fs, g)) REQUIRE(v == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("noiseless end-to-end phase recovery") {
  const auto& s = rubidium87();
  FieldModel m;
  m.b0_t = 8.5425e-6;
  m.harmonics = laboratory_harmonics();
  const double fs = 5e5;
  const auto truth = integrate_larmor_phase(sample_field_trace(m, fs, 0.5), s);
  SynthesisOptions o;
  o.bit_depth = 0;
  o.phi0_rad = 0.9;
  o.probe_on_s = 0.0;
  o.detector_only_s = 0.0;
  const auto rec = synthesize_polarimeter_record(truth, DecayModel{1.0, 0.53}, o);
  ReconstructionOptions ro;
  ro.band_hz = 5000.0;
  ro.center_hz = larmor_frequency(s, m.b0_t) / kTwoPi;
  const auto r = reconstruct_phase(rec, ro);
  REQUIRE_FALSE(r.discontinuous());
  const std::size_t n = r.phase.phase.size();
  const std::size_t off = static_cast<std::size_t>(std::lround(r.phase.t0_s * fs));
  // sin(phi + phi0) has analytic phase phi + phi0 - pi/2
  const double c = std::remainder(r.phase.phase[n / 2] - truth.phase[off + n / 2] - 0.9 + std::numbers::pi / 2, kTwoPi);
  CHECK(std::abs(c) < 1e-3);
  const double shift = r.phase.phase[n / 2] - truth.phase[off + n / 2];
  double worst = 0.0;
  for (std::size_t i = n / 100; i < n - n / 100; ++i)
    worst = std::max(worst, std::abs(r.phase.phase[i] - truth.phase[off + i] - shift));
  CHECK(worst < 1e-3);
}

TEST_CASE("carrier location and weights") {
  const auto& s = rubidium87();
  FieldModel m;
  m.b0_t = 8.5425e-6;
  const double fs = 5e5;
  const auto truth = integrate_larmor_phase(sample_field_trace(m, fs, 0.4), s);
  SynthesisOptions o;
  o.sigma_v = sigma_for_snr(1.0, db_to_ratio(-1.1));
  o.noise_seed = 9;
  const auto rec = synthesize_polarimeter_record(truth, DecayModel{}, o);
  const double f0 = larmor_frequency(s, m.b0_t) / kTwoPi;
  CHECK(locate_carrier(rec, 5000.0) == doctest::Approx(f0).epsilon(2e-4));
  ReconstructionOptions ro;
  ro.band_hz = 500.0;
  const auto r = reconstruct_phase(rec, ro);
  CHECK(r.sigma_v == doctest::Approx(o.sigma_v).epsilon(0.02));
  CHECK(r.phase.weights.size() == r.phase.phase.size());
  const std::size_t mid = r.phase.weights.size() / 2;
  const double expect = std::exp(-2.0 * r.phase.time(mid) / 0.53) / (2.0 * o.sigma_v * o.sigma_v);
  CHECK(r.phase.weights[mid] == doctest::Approx(expect).epsilon(0.1));
}
