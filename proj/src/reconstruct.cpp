#include "fidmag/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "fidmag/errors.hpp"
#include "fidmag/hilbert.hpp"
#include "fidmag/spectrum.hpp"

namespace fidmag {
namespace {

double sample_variance(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(x.size() - 1);
}

std::vector<double> moving_average(std::span<const double> x, std::size_t width) {
  const std::size_t n = x.size();
  width = std::clamp<std::size_t>(width, 1, n);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  const std::size_t half = width / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, lo + width);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

}  // namespace

double locate_carrier(const PolarimeterRecord& record, double band_hz) {
  const std::span<const double> all(record.volts);
  const auto fid = all.subspan(record.segments.fid);
  const auto probe = all.subspan(record.segments.probe_on,
                                 record.segments.fid - record.segments.probe_on);
  const double fs = record.fs_hz;
  double res = std::max(20.0, fs / static_cast<double>(fid.size()));
  const bool have_probe = probe.size() >= 64;
  if (have_probe) res = std::max(res, fs / static_cast<double>(probe.size()));
  const auto sf = power_spectrum(fid, fs, res);
  std::vector<double> excess = sf.psd;
  if (have_probe) {
    const auto sn = power_spectrum(probe, fs, res);
    const std::size_t m = std::min(excess.size(), sn.psd.size());
    for (std::size_t k = 0; k < m; ++k) excess[k] -= sn.psd[k];
  }
  const double f_lo = 10.0 * sf.resolution_hz;
  const double f_hi = 0.45 * fs;
  std::size_t best = 0;
  for (std::size_t k = 0; k < excess.size(); ++k) {
    const double f = sf.frequency_hz[k];
    if (f < f_lo || f > f_hi) continue;
    if (best == 0 || excess[k] > excess[best]) best = k;
  }
  require(best > 0 && excess[best] > 0.0, ErrorKind::kCalibration,
          "locate_carrier: no carrier above the noise spectrum");
  const double f_peak = sf.frequency_hz[best];
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < excess.size(); ++k) {
    const double f = sf.frequency_hz[k];
    if (std::abs(f - f_peak) > 0.5 * band_hz || excess[k] <= 0.0) continue;
    num += f * excess[k];
    den += excess[k];
  }
  return num / den;
}

Reconstruction reconstruct_phase(const PolarimeterRecord& record,
                                 const ReconstructionOptions& opt) {
  require(record.segments.fid < record.volts.size(), ErrorKind::kValidation,
          "reconstruct_phase: record has no FID segment");
  Reconstruction out;
  out.center_hz = opt.center_hz > 0.0 ? opt.center_hz : locate_carrier(record, opt.band_hz);
  const FilterSpec spec = band_around(out.center_hz, opt.band_hz, opt.order);
  const ButterworthBandpass filter(spec, record.fs_hz);
  out.enbw_hz = filter.enbw_hz();
  out.edge_guard = opt.edge_guard > 0 ? opt.edge_guard : filter.edge_guard();

  const std::span<const double> all(record.volts);
  const auto fid = all.subspan(record.segments.fid);
  require(fid.size() > 2 * out.edge_guard + 100, ErrorKind::kEdge,
          "reconstruct_phase: FID segment shorter than twice the edge guard");
  const auto filtered = filter.apply(fid);
  const auto analytic = analytic_signal(filtered, record.fs_hz);
  const auto unwrapped = unwrap_phase(analytic.wrapped_phase());
  out.unwrap_corrections = unwrapped.corrections;

  const std::size_t g = out.edge_guard;
  const std::size_t n = fid.size() - 2 * g;
  out.phase.fs_hz = record.fs_hz;
  out.phase.t0_s = static_cast<double>(g) / record.fs_hz;
  out.phase.phase.assign(unwrapped.phase.begin() + static_cast<std::ptrdiff_t>(g),
                         unwrapped.phase.begin() + static_cast<std::ptrdiff_t>(g + n));
  for (std::size_t idx : unwrapped.discontinuities) {
    if (idx >= g && idx < g + n) out.discontinuities.push_back(idx - g);
  }
  std::vector<double> power(n);
  out.envelope.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = analytic.samples[g + i];
    power[i] = std::norm(z);
    out.envelope[i] = std::sqrt(power[i]);
  }

  const auto probe = all.subspan(record.segments.probe_on,
                                 record.segments.fid - record.segments.probe_on);
  if (probe.size() >= 2) {
    const double sigma2 = sample_variance(probe);
    out.sigma_v = std::sqrt(sigma2);
    if (sigma2 > 0.0) {
      // In-band noise adds 2 sigma_b^2 to |V_a|^2, sigma_b^2 = sigma^2 2 ENBW/fs.
      const double noise_power = 2.0 * sigma2 * 2.0 * out.enbw_hz / record.fs_hz;
      const auto width = static_cast<std::size_t>(
          std::llround(opt.envelope_smoothing_s * record.fs_hz));
      const auto smooth = moving_average(power, width);
      out.phase.weights.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double a2 = std::max(smooth[i] - noise_power, 0.01 * noise_power);
        out.phase.weights[i] = a2 / (2.0 * sigma2);
      }
    }
  }
  return out;
}

PhaseSeries slice(const PhaseSeries& p, double t_begin, double t_end) {
  const auto first = static_cast<std::ptrdiff_t>(
      std::max(0.0, std::ceil((t_begin - p.t0_s) * p.fs_hz - 1e-9)));
  const auto last = static_cast<std::ptrdiff_t>(std::min(
      static_cast<double>(p.phase.size()), std::ceil((t_end - p.t0_s) * p.fs_hz - 1e-9)));
  require(last - first >= 2, ErrorKind::kDomain, "slice: window holds fewer than 2 samples");
  PhaseSeries out;
  out.fs_hz = p.fs_hz;
  out.t0_s = p.t0_s + static_cast<double>(first) / p.fs_hz;
  out.phase.assign(p.phase.begin() + first, p.phase.begin() + last);
  if (!p.weights.empty()) out.weights.assign(p.weights.begin() + first, p.weights.begin() + last);
  return out;
}

}  // namespace fidmag
