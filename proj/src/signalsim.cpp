#include "fidmag/signalsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>

#include "fidmag/errors.hpp"
#include "fidmag/hilbert.hpp"
#include "fidmag/rng.hpp"

namespace fidmag {
namespace {

double variance(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(x.size() - 1);
}

}  // namespace

void validate(const PhaseSeries& p) {
  require(p.phase.size() >= 2, ErrorKind::kValidation, "phase series: need >= 2 samples");
  require(p.fs_hz > 0.0, ErrorKind::kValidation, "phase series: fs must be > 0");
  for (double v : p.phase) {
    require(std::isfinite(v), ErrorKind::kValidation, "phase series: non-finite phase");
  }
  if (!p.weights.empty()) {
    require(p.weights.size() == p.phase.size(), ErrorKind::kValidation,
            "phase series: weights length mismatch");
    for (double w : p.weights) {
      require(std::isfinite(w) && w >= 0.0, ErrorKind::kValidation,
              "phase series: weights must be finite and >= 0");
    }
  }
}

PhaseSeries integrate_larmor_phase(const FieldTrace& trace, const AtomicSpecies& s,
                                   const MicrowaveDressing& dressing) {
  require(trace.samples.size() >= 2, ErrorKind::kDomain,
          "integrate_larmor_phase: trace needs >= 2 samples");
  PhaseSeries out;
  out.fs_hz = trace.fs_hz;
  out.phase.resize(trace.samples.size());
  const double half_dt = 0.5 / trace.fs_hz;
  double prev = larmor_frequency(s, trace.samples[0], dressing);
  double acc = 0.0;
  out.phase[0] = 0.0;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const double w = larmor_frequency(s, trace.samples[i], dressing);
    acc += half_dt * (prev + w);
    out.phase[i] = acc;
    prev = w;
  }
  return out;
}

void validate(const DecayModel& d) {
  require(d.a0_v > 0.0 && std::isfinite(d.a0_v), ErrorKind::kValidation,
          "decay: A0 must be > 0");
  require(d.lifetime_s > 0.0, ErrorKind::kValidation, "decay: lifetime must be > 0");
}

double sigma_for_snr(double a0_v, double snr) {
  require(snr > 0.0, ErrorKind::kDomain, "sigma_for_snr: SNR must be > 0");
  return a0_v / std::sqrt(2.0 * snr);
}

PolarimeterRecord synthesize_polarimeter_record(const PhaseSeries& phase,
                                                const DecayModel& decay,
                                                const SynthesisOptions& opt) {
  validate(phase);
  validate(decay);
  require(opt.sigma_v >= 0.0, ErrorKind::kValidation, "synthesis: sigma must be >= 0");
  require(opt.bit_depth == 0 || (opt.bit_depth >= 2 && opt.bit_depth <= 32),
          ErrorKind::kValidation, "synthesis: bit depth must be 0 or in [2, 32]");
  require(opt.detector_only_s >= 0.0 && opt.probe_on_s >= 0.0, ErrorKind::kValidation,
          "synthesis: segment durations must be >= 0");

  PolarimeterRecord rec;
  rec.fs_hz = phase.fs_hz;
  rec.bit_depth = opt.bit_depth;
  rec.phi0_rad = opt.phi0_rad;
  const auto n_det = static_cast<std::size_t>(std::llround(opt.detector_only_s * rec.fs_hz));
  const auto n_probe = static_cast<std::size_t>(std::llround(opt.probe_on_s * rec.fs_hz));
  const std::size_t n_fid = phase.phase.size();
  rec.segments = {0, n_det, n_det + n_probe};
  rec.volts.resize(n_det + n_probe + n_fid);

  const double full_scale = opt.full_scale_v > 0.0 ? opt.full_scale_v : 4.0 * decay.a0_v;
  rec.meta = {decay.a0_v, decay.lifetime_s, opt.sigma_v, opt.detector_fraction * opt.sigma_v,
              full_scale, 0, false};

  auto eng = make_engine(opt.noise_seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sd_det = rec.meta.detector_sigma_v;
  for (std::size_t i = 0; i < n_det; ++i) rec.volts[i] = sd_det * unit(eng);
  for (std::size_t i = n_det; i < n_det + n_probe; ++i) rec.volts[i] = opt.sigma_v * unit(eng);
  const double inv_life = std::isinf(decay.lifetime_s) ? 0.0 : 1.0 / decay.lifetime_s;
  for (std::size_t i = 0; i < n_fid; ++i) {
    const double t = static_cast<double>(i) / rec.fs_hz;
    const double a = decay.a0_v * std::exp(-t * inv_life);
    double v = a * std::sin(phase.phase[i] + opt.phi0_rad);
    if (opt.sigma_v > 0.0) v += opt.sigma_v * unit(eng);
    rec.volts[rec.segments.fid + i] = v;
  }

  if (opt.bit_depth > 0) {
    const double half_range = std::ldexp(1.0, opt.bit_depth - 1);
    rec.scale_v_per_code = full_scale / half_range;
    const double lo = -half_range;
    const double hi = half_range - 1.0;
    rec.codes.resize(rec.volts.size());
    for (std::size_t i = 0; i < rec.volts.size(); ++i) {
      double c = std::nearbyint(rec.volts[i] / rec.scale_v_per_code);
      if (c < lo || c > hi) {
        c = std::clamp(c, lo, hi);
        ++rec.meta.clipped_samples;
      }
      rec.codes[i] = static_cast<std::int32_t>(c);
      rec.volts[i] = c * rec.scale_v_per_code;
    }
  } else {
    rec.scale_v_per_code = 0.0;
  }
  rec.meta.clip_warning =
      static_cast<double>(rec.meta.clipped_samples) > 1e-6 * static_cast<double>(rec.size());
  return rec;
}

SnrSeries full_bandwidth_snr(const PolarimeterRecord& record, double window_s) {
  const auto& seg = record.segments;
  require(seg.fid > seg.probe_on + 1, ErrorKind::kCalibration,
          "full_bandwidth_snr: record has no probe-on noise segment");
  const std::span<const double> all(record.volts);
  const double sigma2 = variance(all.subspan(seg.probe_on, seg.fid - seg.probe_on));
  require(sigma2 > 0.0, ErrorKind::kCalibration,
          "full_bandwidth_snr: probe-on segment has zero variance");

  const auto fid = all.subspan(seg.fid);
  std::vector<double> centred(fid.begin(), fid.end());
  double mean = 0.0;
  for (double v : centred) mean += v;
  mean /= static_cast<double>(centred.size());
  for (double& v : centred) v -= mean;
  const auto analytic = analytic_signal(centred, record.fs_hz);

  const auto len = static_cast<std::size_t>(std::llround(window_s * record.fs_hz));
  require(len >= 1 && len <= centred.size(), ErrorKind::kDomain,
          "full_bandwidth_snr: window outside record");
  SnrSeries out;
  for (std::size_t start = 0; start + len <= centred.size(); start += len) {
    double p = 0.0;
    for (std::size_t i = start; i < start + len; ++i) p += std::norm(analytic.samples[i]);
    p /= static_cast<double>(len);
    const double a2 = std::max(p - 2.0 * sigma2, 0.0);
    out.time_s.push_back((static_cast<double>(start) + 0.5 * static_cast<double>(len)) /
                         record.fs_hz);
    out.snr.push_back(a2 / (2.0 * sigma2));
  }
  return out;
}

}  // namespace fidmag
