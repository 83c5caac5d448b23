#include "fidmag/fieldmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fidmag/errors.hpp"
#include "fidmag/rng.hpp"

namespace fidmag {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t sample_count(double fs, double duration) {
  require(fs > 0.0 && std::isfinite(fs), ErrorKind::kDomain, "sample rate must be > 0");
  require(duration > 0.0 && std::isfinite(duration), ErrorKind::kDomain,
          "duration must be > 0");
  const double n = std::round(fs * duration);
  require(n >= 1.0 && n < 4e9, ErrorKind::kDomain, "trace length out of range");
  return static_cast<std::size_t>(n);
}

std::uint64_t hash_model(const FieldModel& m) {
  std::uint64_t h = fnv1a(&m.b0_t, sizeof m.b0_t);
  h = fnv1a(&m.white_asd_t_rthz, sizeof m.white_asd_t_rthz, h);
  h = fnv1a(&m.line_frequency_hz, sizeof m.line_frequency_hz, h);
  h = fnv1a(&m.line_drift_hz, sizeof m.line_drift_hz, h);
  for (const auto& k : m.harmonics) h = fnv1a(&k, sizeof k, h);
  return fnv1a(&m.seed, sizeof m.seed, h);
}

double drifted_frequency(const FieldModel& m, const Harmonic& h) {
  return h.frequency_hz +
         harmonic_order(h.frequency_hz, m.line_frequency_hz) * m.line_drift_hz;
}

}  // namespace

void validate(const FieldModel& m) {
  require(std::isfinite(m.b0_t) && m.b0_t >= 0.0, ErrorKind::kValidation,
          "field model: B0 must be finite and >= 0");
  require(std::isfinite(m.white_asd_t_rthz) && m.white_asd_t_rthz >= 0.0,
          ErrorKind::kValidation, "field model: s_B must be >= 0");
  require(m.line_frequency_hz > 0.0, ErrorKind::kValidation,
          "field model: line frequency must be > 0");
  for (const auto& h : m.harmonics) {
    require(h.frequency_hz > 0.0, ErrorKind::kValidation,
            "field model: harmonic frequency must be > 0");
    require(h.rms_t >= 0.0, ErrorKind::kValidation,
            "field model: harmonic amplitude must be >= 0");
  }
}

std::vector<Harmonic> laboratory_harmonics() {
  return {{50.0, 41.92e-9, 0.3}, {150.0, 10.88e-9, 1.1}, {250.0, 2.0e-9, 2.0}};
}

int harmonic_order(double frequency_hz, double line_frequency_hz) {
  return std::max(1, static_cast<int>(std::lround(frequency_hz / line_frequency_hz)));
}

double harmonic_field(const FieldModel& model, double t) {
  double b = 0.0;
  for (const auto& h : model.harmonics) {
    b += std::numbers::sqrt2 * h.rms_t *
         std::sin(kTwoPi * drifted_frequency(model, h) * t + h.phase_rad);
  }
  return b;
}

FieldTrace sample_field_trace(const FieldModel& model, double fs_hz,
                              double duration_s) {
  validate(model);
  const std::size_t n = sample_count(fs_hz, duration_s);
  for (const auto& h : model.harmonics) {
    require(fs_hz > 2.0 * drifted_frequency(model, h), ErrorKind::kDomain,
            "sample rate " + std::to_string(fs_hz) + " Hz aliases the " +
                std::to_string(h.frequency_hz) + " Hz harmonic");
  }
  FieldTrace out;
  out.fs_hz = fs_hz;
  out.duration_s = duration_s;
  out.seed = model.seed;
  out.model_hash = hash_model(model);
  out.samples.assign(n, model.b0_t);

  if (model.white_asd_t_rthz > 0.0) {
    auto eng = make_engine(model.seed);
    std::normal_distribution<double> noise(
        0.0, model.white_asd_t_rthz * std::sqrt(0.5 * fs_hz));
    for (auto& b : out.samples) b += noise(eng);
  }
  for (const auto& h : model.harmonics) {
    const double w = kTwoPi * drifted_frequency(model, h);
    const double peak = std::numbers::sqrt2 * h.rms_t;
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] += peak * std::sin(w * out.time(i) + h.phase_rad);
    }
  }
  return out;
}

void validate(const CompensationField& c) {
  require(c.time_constant_s >= 0.0, ErrorKind::kValidation,
          "compensation: time constant must be >= 0");
  require(c.max_amplitude_t > 0.0, ErrorKind::kValidation,
          "compensation: max amplitude must be > 0");
  require(c.line_frequency_hz > 0.0 && c.line_frequency_hz + c.line_drift_hz > 0.0,
          ErrorKind::kValidation, "compensation: line frequency must be > 0");
  for (const auto& h : c.harmonics) {
    require(h.rms_t >= 0.0, ErrorKind::kValidation,
            "compensation: harmonic amplitude must be >= 0");
    require(h.frequency_hz > 0.0 && h.frequency_hz <= c.bandwidth_limit_hz,
            ErrorKind::kValidation,
            "compensation: harmonic outside the actuator bandwidth");
  }
}

FieldTrace apply_actuator(const FieldTrace& ideal, const CompensationField& comp) {
  validate(comp);
  FieldTrace out = ideal;
  out.clipped_samples = 0;
  if (!comp.actuator_dynamics) return out;
  auto& y = out.samples;
  if (comp.time_constant_s > 0.0 && !y.empty()) {
    // H(s) = 1/(1 + tau s) under s = 2 fs (1 - z^-1)/(1 + z^-1).
    const double k = 2.0 * ideal.fs_hz * comp.time_constant_s;
    const double b0 = 1.0 / (1.0 + k);
    const double a1 = (1.0 - k) / (1.0 + k);
    // Actuator at rest before the first sample.
    double x_prev = 0.0;
    double y_prev = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double x = ideal.samples[i];
      const double v = b0 * (x + x_prev) - a1 * y_prev;
      x_prev = x;
      y_prev = v;
      y[i] = v;
    }
  }
  for (auto& v : y) {
    if (std::abs(v) > comp.max_amplitude_t) {
      v = std::copysign(comp.max_amplitude_t, v);
      ++out.clipped_samples;
    }
  }
  return out;
}

FieldTrace compensation_waveform(const CompensationField& comp, double fs_hz,
                                 double duration_s) {
  validate(comp);
  const std::size_t n = sample_count(fs_hz, duration_s);
  const std::size_t pre =
      comp.actuator_dynamics
          ? static_cast<std::size_t>(std::ceil(40.0 * comp.time_constant_s * fs_hz))
          : 0;
  FieldTrace ideal;
  ideal.fs_hz = fs_hz;
  ideal.duration_s = duration_s;
  ideal.samples.assign(n + pre, 0.0);
  const double period = 1.0 / (comp.line_frequency_hz + comp.line_drift_hz);
  for (const auto& h : comp.harmonics) {
    const int k = harmonic_order(h.frequency_hz, comp.line_frequency_hz);
    const double w = kTwoPi * (comp.retrigger_each_cycle ? k * comp.line_frequency_hz
                                                         : h.frequency_hz);
    const double phase = h.phase_rad + k * comp.trigger_phase_error_rad;
    const double peak = std::numbers::sqrt2 * h.rms_t;
    for (std::size_t i = 0; i < n + pre; ++i) {
      double t = (static_cast<double>(i) - static_cast<double>(pre)) / fs_hz;
      if (comp.retrigger_each_cycle) t -= std::floor(t / period) * period;
      ideal.samples[i] -= peak * std::sin(w * t + phase);
    }
  }
  FieldTrace out = apply_actuator(ideal, comp);
  out.samples.erase(out.samples.begin(),
                    out.samples.begin() + static_cast<std::ptrdiff_t>(pre));
  out.clipped_samples = static_cast<std::size_t>(
      std::count_if(out.samples.begin(), out.samples.end(), [&](double v) {
        return comp.actuator_dynamics && std::abs(v) >= comp.max_amplitude_t;
      }));
  out.duration_s = duration_s;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& k : comp.harmonics) h = fnv1a(&k, sizeof k, h);
  out.model_hash = h;
  return out;
}

FieldTrace add_traces(const FieldTrace& a, const FieldTrace& b) {
  require(a.samples.size() == b.samples.size() && a.fs_hz == b.fs_hz,
          ErrorKind::kDomain, "add_traces: traces are on different grids");
  FieldTrace out = a;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += b.samples[i];
  out.clipped_samples = a.clipped_samples + b.clipped_samples;
  return out;
}

}  // namespace fidmag
