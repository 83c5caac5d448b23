#pragma once

#include <span>
#include <string>
#include <vector>

#include "fidmag/fieldmodel.hpp"

namespace fidmag {

/// One-sided PSD in unit^2/Hz on frequencies k * resolution_hz.
struct SpectrumEstimate {
  std::vector<double> frequency_hz;
  std::vector<double> psd;
  double resolution_hz = 0.0;
  std::string window = "hann";
  std::size_t segments = 0;

  /// Sum of psd * df over [f_lo, f_hi] (bin centres inside the interval).
  double band_power(double f_lo, double f_hi) const;
  /// Mean psd over bins inside [f_lo, f_hi].
  double band_mean(double f_lo, double f_hi) const;
};

/// Welch estimate: Hann segments of fs/resolution samples, 50% overlap,
/// per-segment mean removal. resolution below 1/duration is a domain error.
SpectrumEstimate power_spectrum(std::span<const double> x, double fs_hz,
                                double resolution_hz);

struct Spectrogram {
  std::vector<double> time_s;        // window centres
  std::vector<double> frequency_hz;
  std::vector<std::vector<double>> psd;  // [time][frequency]

  /// Frequency of the largest bin in each column, restricted to [f_lo, f_hi].
  std::vector<double> ridge(double f_lo, double f_hi) const;
};

/// Hann-windowed periodograms. hop defaults to window_len / 4.
Spectrogram spectrogram(std::span<const double> x, double fs_hz, double window_len_s,
                        double hop_s = 0.0);

/// Carson's rule, 2 (sum of peak deviations + highest modulation frequency),
/// with deviation_k = gamma sqrt(2) a_k / 2 pi. gamma in rad s^-1 T^-1.
double carson_bandwidth(std::span<const Harmonic> harmonics, double gamma);

/// Magnetic-field samples from a reconstructed phase: central-difference
/// derivative divided by gamma.
std::vector<double> field_from_phase(std::span<const double> phase, double fs_hz,
                                     double gamma);

}  // namespace fidmag
