#include "fidmag/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fidmag/errors.hpp"

namespace fidmag {
namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

cd section_response(const Biquad& s, cd z1) {
  // z1 = z^-1
  return (s.b0 + s.b1 * z1 + s.b2 * z1 * z1) / (1.0 + s.a1 * z1 + s.a2 * z1 * z1);
}

void run_section(const Biquad& s, std::vector<double>& x) {
  // Transposed direct form II.
  double z1 = 0.0;
  double z2 = 0.0;
  for (auto& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

}  // namespace

FilterSpec band_around(double center_hz, double width_hz, int order) {
  FilterSpec s;
  s.prototype_order = order;
  s.low_edge_hz = center_hz - 0.5 * width_hz;
  s.high_edge_hz = center_hz + 0.5 * width_hz;
  return s;
}

ButterworthBandpass::ButterworthBandpass(const FilterSpec& spec, double fs_hz)
    : spec_(spec), fs_(fs_hz) {
  require(spec.prototype_order >= 1 && spec.prototype_order <= 20,
          ErrorKind::kFilterDesign, "filter order must be in [1, 20]");
  require(spec.prototype_order % 2 == 0, ErrorKind::kFilterDesign,
          "filter order must be even (conjugate pole pairs)");
  require(spec.low_edge_hz > 0.0 && spec.low_edge_hz < spec.high_edge_hz &&
              spec.high_edge_hz < 0.5 * fs_hz,
          ErrorKind::kFilterDesign,
          "band edges [" + std::to_string(spec.low_edge_hz) + ", " +
              std::to_string(spec.high_edge_hz) + "] Hz not inside (0, fs/2)");

  const int n = spec.prototype_order;
  const double k = 2.0 * fs_hz;
  const double w1 = k * std::tan(kPi * spec.low_edge_hz / fs_hz);
  const double w2 = k * std::tan(kPi * spec.high_edge_hz / fs_hz);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;
  const double f0 = std::atan(w0 / k) * fs_hz / kPi;
  const cd z0 = std::polar(1.0, -2.0 * kPi * f0 / fs_hz);

  for (int i = 0; i < n / 2; ++i) {
    // Upper-half-plane prototype pole; its conjugate is implied by the
    // real-coefficient section.
    const cd p = std::polar(1.0, kPi * (2.0 * i + n + 1) / (2.0 * n));
    const cd half = p * (bw / 2.0);
    const cd root = std::sqrt(half * half - w0 * w0);
    for (const cd sp : {half + root, half - root}) {
      const cd zp = (k + sp) / (k - sp);
      poles_.push_back(zp);
      poles_.push_back(std::conj(zp));
      Biquad s{1.0, 0.0, -1.0, -2.0 * zp.real(), std::norm(zp)};
      const double g = 1.0 / std::abs(section_response(s, z0));
      s.b0 *= g;
      s.b2 *= g;
      sections_.push_back(s);
    }
  }

  double slowest = 1.0;
  for (const auto& z : poles_) {
    require(std::abs(z) < 1.0, ErrorKind::kFilterDesign,
            "discretised filter is unstable (pole on or outside unit circle)");
    slowest = std::min(slowest, -std::log(std::abs(z)));
  }
  settle_ = static_cast<std::size_t>(std::ceil(std::log(1e4) / slowest));

  // ENBW by quadrature over a window that holds essentially all the power.
  const double lo = std::max(0.0, spec.low_edge_hz - 4.0 * spec.width_hz());
  const double hi = std::min(0.5 * fs_hz, spec.high_edge_hz + 4.0 * spec.width_hz());
  const int steps = 20000;
  const double df = (hi - lo) / steps;
  double acc = 0.0;
  double peak = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double g = power_gain(lo + i * df);
    acc += (i == 0 || i == steps ? 0.5 : 1.0) * g;
    peak = std::max(peak, g);
  }
  enbw_ = acc * df / peak;
}

std::complex<double> ButterworthBandpass::response(double f_hz) const {
  const cd z1 = std::polar(1.0, -2.0 * kPi * f_hz / fs_);
  cd h = 1.0;
  for (const auto& s : sections_) h *= section_response(s, z1);
  return h;
}

double ButterworthBandpass::power_gain(double f_hz) const {
  const double g = std::norm(response(f_hz));
  return spec_.zero_phase ? g * g : g;
}

std::size_t ButterworthBandpass::edge_guard() const {
  return std::max<std::size_t>(1000, settle_);
}

std::vector<double> ButterworthBandpass::filter(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : sections_) run_section(s, y);
  return y;
}

std::vector<double> ButterworthBandpass::apply(std::span<const double> x) const {
  const std::size_t n = x.size();
  // Effective impulse-response length taken as the slowest pole's time constant.
  const double tau_samples = static_cast<double>(settle_) / std::log(1e4);
  require(static_cast<double>(n) > 10.0 * tau_samples && n >= 16, ErrorKind::kEdge,
          "record of " + std::to_string(n) +
              " samples too short for the filter response");
  if (!spec_.zero_phase) return filter(x);

  // Odd reflection about each end point keeps value and slope continuous.
  const std::size_t pad = std::min(n - 1, settle_);
  std::vector<double> buf(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    buf[pad - 1 - i] = 2.0 * x[0] - x[i + 1];
    buf[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), buf.begin() + static_cast<std::ptrdiff_t>(pad));
  for (const auto& s : sections_) run_section(s, buf);
  std::reverse(buf.begin(), buf.end());
  for (const auto& s : sections_) run_section(s, buf);
  std::reverse(buf.begin(), buf.end());
  return {buf.begin() + static_cast<std::ptrdiff_t>(pad),
          buf.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> bandpass_zero_phase(std::span<const double> x, double fs_hz,
                                        const FilterSpec& spec) {
  return ButterworthBandpass(spec, fs_hz).apply(x);
}

}  // namespace fidmag
