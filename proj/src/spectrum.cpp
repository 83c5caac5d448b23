#include "fidmag/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fidmag/errors.hpp"
#include "fidmag/fft.hpp"

namespace fidmag {
namespace {

std::vector<double> hann(std::size_t n) {
  // Periodic Hann, as used for spectral analysis.
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

// Accumulates one-sided periodograms of windowed, mean-removed segments.
class Periodogram {
 public:
  Periodogram(std::size_t len, double fs)
      : len_(len), fs_(fs), win_(hann(len)), plan_(len), seg_(len) {
    for (double v : win_) wss_ += v * v;
  }

  void add(std::span<const double> x, std::vector<double>& acc) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(len_);
    for (std::size_t i = 0; i < len_; ++i) seg_[i] = (x[i] - mean) * win_[i];
    plan_.execute(seg_, bins_);
    acc.resize(bins_.size(), 0.0);
    const double scale = 2.0 / (fs_ * wss_);
    for (std::size_t k = 0; k < bins_.size(); ++k) {
      double p = std::norm(bins_[k]) * scale;
      if (k == 0 || (len_ % 2 == 0 && k == len_ / 2)) p *= 0.5;
      acc[k] += p;
    }
  }

 private:
  std::size_t len_;
  double fs_;
  std::vector<double> win_;
  fft::RealForward plan_;
  std::vector<double> seg_;
  std::vector<fft::Complex> bins_;
  double wss_ = 0.0;
};

}  // namespace

double SpectrumEstimate::band_power(double f_lo, double f_hi) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    if (frequency_hz[k] >= f_lo && frequency_hz[k] <= f_hi) acc += psd[k];
  }
  return acc * resolution_hz;
}

double SpectrumEstimate::band_mean(double f_lo, double f_hi) const {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    if (frequency_hz[k] >= f_lo && frequency_hz[k] <= f_hi) {
      acc += psd[k];
      ++n;
    }
  }
  require(n > 0, ErrorKind::kDomain, "band_mean: no bins in band");
  return acc / static_cast<double>(n);
}

SpectrumEstimate power_spectrum(std::span<const double> x, double fs_hz,
                                double resolution_hz) {
  require(fs_hz > 0.0 && resolution_hz > 0.0, ErrorKind::kDomain,
          "power_spectrum: fs and resolution must be > 0");
  const double duration = static_cast<double>(x.size()) / fs_hz;
  require(resolution_hz * duration >= 1.0 - 1e-9, ErrorKind::kDomain,
          "power_spectrum: resolution " + std::to_string(resolution_hz) +
              " Hz finer than 1/duration");
  const auto len = std::min<std::size_t>(
      x.size(), static_cast<std::size_t>(std::llround(fs_hz / resolution_hz)));
  require(len >= 4, ErrorKind::kDomain, "power_spectrum: segment shorter than 4 samples");
  const std::size_t hop = std::max<std::size_t>(1, len / 2);

  Periodogram pg(len, fs_hz);
  std::vector<double> acc;
  std::size_t count = 0;
  for (std::size_t start = 0; start + len <= x.size(); start += hop) {
    pg.add(x.subspan(start, len), acc);
    ++count;
  }
  SpectrumEstimate out;
  out.resolution_hz = fs_hz / static_cast<double>(len);
  out.segments = count;
  out.psd.resize(acc.size());
  out.frequency_hz.resize(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) {
    out.psd[k] = acc[k] / static_cast<double>(count);
    out.frequency_hz[k] = static_cast<double>(k) * out.resolution_hz;
  }
  return out;
}

std::vector<double> Spectrogram::ridge(double f_lo, double f_hi) const {
  std::vector<double> out;
  out.reserve(psd.size());
  for (const auto& col : psd) {
    double best = -1.0;
    double f_best = 0.0;
    for (std::size_t k = 0; k < col.size(); ++k) {
      if (frequency_hz[k] < f_lo || frequency_hz[k] > f_hi) continue;
      if (col[k] > best) {
        best = col[k];
        f_best = frequency_hz[k];
      }
    }
    out.push_back(f_best);
  }
  return out;
}

Spectrogram spectrogram(std::span<const double> x, double fs_hz, double window_len_s,
                        double hop_s) {
  if (hop_s <= 0.0) hop_s = 0.25 * window_len_s;
  require(hop_s <= window_len_s, ErrorKind::kDomain, "spectrogram: hop > window length");
  const auto len = static_cast<std::size_t>(std::llround(window_len_s * fs_hz));
  require(len >= 64, ErrorKind::kDomain, "spectrogram: window shorter than 64 samples");
  require(len <= x.size(), ErrorKind::kDomain, "spectrogram: window longer than record");
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hop_s * fs_hz)));

  Periodogram pg(len, fs_hz);
  Spectrogram out;
  for (std::size_t start = 0; start + len <= x.size(); start += hop) {
    std::vector<double> col;
    pg.add(x.subspan(start, len), col);
    out.psd.push_back(std::move(col));
    out.time_s.push_back((static_cast<double>(start) + 0.5 * static_cast<double>(len)) / fs_hz);
  }
  const std::size_t bins = len / 2 + 1;
  out.frequency_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.frequency_hz[k] = static_cast<double>(k) * fs_hz / static_cast<double>(len);
  }
  return out;
}

double carson_bandwidth(std::span<const Harmonic> harmonics, double gamma) {
  require(!harmonics.empty(), ErrorKind::kDomain,
          "carson_bandwidth: at least one harmonic is required");
  double deviation = 0.0;
  double f_max = 0.0;
  for (const auto& h : harmonics) {
    deviation += gamma * std::numbers::sqrt2 * h.rms_t / (2.0 * std::numbers::pi);
    f_max = std::max(f_max, h.frequency_hz);
  }
  return 2.0 * (deviation + f_max);
}

std::vector<double> field_from_phase(std::span<const double> phase, double fs_hz,
                                     double gamma) {
  const std::size_t n = phase.size();
  require(n >= 3, ErrorKind::kDomain, "field_from_phase: need >= 3 samples");
  std::vector<double> b(n);
  const double k = fs_hz / gamma;
  b[0] = (phase[1] - phase[0]) * k;
  b[n - 1] = (phase[n - 1] - phase[n - 2]) * k;
  for (std::size_t i = 1; i + 1 < n; ++i) b[i] = 0.5 * (phase[i + 1] - phase[i - 1]) * k;
  return b;
}

}  // namespace fidmag
