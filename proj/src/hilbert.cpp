#include "fidmag/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fidmag/errors.hpp"
#include "fidmag/fft.hpp"

namespace fidmag {

std::vector<double> AnalyticRecord::envelope() const {
  std::vector<double> out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(),
                 [](const auto& z) { return std::abs(z); });
  return out;
}

std::vector<double> AnalyticRecord::wrapped_phase() const {
  std::vector<double> out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(),
                 [](const auto& z) { return std::arg(z); });
  return out;
}

std::size_t next_fast_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2, 3, 5, 7}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

AnalyticRecord analytic_signal(std::span<const double> v, double fs_hz) {
  require(v.size() >= 2, ErrorKind::kDomain, "analytic_signal: need >= 2 samples");
  const std::size_t n = v.size();
  const std::size_t m = next_fast_size(n);
  std::vector<double> padded(m, 0.0);
  std::copy(v.begin(), v.end(), padded.begin());
  auto spec = fft::forward_real(padded);  // bins 0..m/2
  spec.resize(m, 0.0);
  // Bins 1..ceil(m/2)-1 are doubled; the Nyquist bin (even m) is kept.
  const std::size_t half = (m + 1) / 2;
  for (std::size_t k = 1; k < half; ++k) spec[k] *= 2.0;
  auto time = fft::inverse(spec);
  AnalyticRecord out;
  out.fs_hz = fs_hz;
  out.samples.resize(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = {v[i], time[i].imag() * scale};
  return out;
}

UnwrapResult unwrap_phase(std::span<const double> wrapped) {
  constexpr double kPi = std::numbers::pi;
  UnwrapResult out;
  out.phase.assign(wrapped.begin(), wrapped.end());
  if (wrapped.size() < 2) return out;
  double correction = 0.0;
  for (std::size_t i = 1; i < wrapped.size(); ++i) {
    const double d = wrapped[i] - wrapped[i - 1];
    double dd = std::fmod(d + kPi, 2.0 * kPi);
    if (dd < 0.0) dd += 2.0 * kPi;
    dd -= kPi;
    if (dd == -kPi && d > 0.0) dd = kPi;
    if (std::abs(d) >= kPi) {
      correction += dd - d;
      ++out.corrections;
    }
    out.phase[i] = wrapped[i] + correction;
  }

  std::vector<double> inc(wrapped.size() - 1);
  for (std::size_t i = 1; i < out.phase.size(); ++i) {
    inc[i - 1] = out.phase[i] - out.phase[i - 1];
  }
  std::vector<double> tmp = inc;
  auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  const double median = *mid;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    if (std::abs(inc[i] - median) > 0.5 * kPi) out.discontinuities.push_back(i + 1);
  }
  return out;
}

}  // namespace fidmag
