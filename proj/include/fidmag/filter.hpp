#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fidmag {

struct FilterSpec {
  int prototype_order = 6;
  double low_edge_hz = 0.0;
  double high_edge_hz = 0.0;
  bool zero_phase = true;

  double center_hz() const { return 0.5 * (low_edge_hz + high_edge_hz); }
  double width_hz() const { return high_edge_hz - low_edge_hz; }
};

/// Band of `width_hz` centred on `center_hz`.
FilterSpec band_around(double center_hz, double width_hz, int order = 6);

/// One second-order section, b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Digital Butterworth bandpass: analog prototype of order n, lowpass to
/// bandpass mapping, bilinear transform with both edges pre-warped. Stored
/// as n biquads, each with zeros at z = +1 and z = -1 and unit gain at the
/// centre frequency.
class ButterworthBandpass {
 public:
  ButterworthBandpass(const FilterSpec& spec, double fs_hz);

  const FilterSpec& spec() const { return spec_; }
  double fs_hz() const { return fs_; }
  const std::vector<Biquad>& sections() const { return sections_; }
  const std::vector<std::complex<double>>& poles() const { return poles_; }

  /// Complex response of a single (causal) pass at f.
  std::complex<double> response(double f_hz) const;

  /// Power gain of the applied filter: |H|^2 for one pass, |H|^4 when zero-phase.
  double power_gain(double f_hz) const;

  /// Equivalent noise bandwidth of the applied filter (integral of
  /// power_gain over 0..fs/2 divided by the peak gain).
  double enbw_hz() const { return enbw_; }

  /// Samples for the slowest pole to decay by 1e4.
  std::size_t settling_samples() const { return settle_; }

  /// Samples to exclude at each record edge downstream: max(1000, settling).
  std::size_t edge_guard() const;

  /// Single causal pass.
  std::vector<double> filter(std::span<const double> x) const;

  /// Forward-backward pass (or single pass when spec.zero_phase is false),
  /// with odd-reflection padding at both ends.
  std::vector<double> apply(std::span<const double> x) const;

 private:
  FilterSpec spec_;
  double fs_;
  std::vector<Biquad> sections_;
  std::vector<std::complex<double>> poles_;
  double enbw_ = 0.0;
  std::size_t settle_ = 0;
};

/// Convenience: design and apply.
std::vector<double> bandpass_zero_phase(std::span<const double> x, double fs_hz,
                                        const FilterSpec& spec);

}  // namespace fidmag
