#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fidmag {

struct AnalyticRecord {
  std::vector<std::complex<double>> samples;
  double fs_hz = 0.0;

  std::vector<double> envelope() const;
  std::vector<double> wrapped_phase() const;
};

/// V + i H[V] by one-siding the spectrum (positive bins doubled, negative
/// bins zeroed, dc and Nyquist kept). The transform length is padded with
/// zeros to a 2^a 3^b 5^c 7^d size; the real part is the input, verbatim.
AnalyticRecord analytic_signal(std::span<const double> v, double fs_hz);

struct UnwrapResult {
  std::vector<double> phase;
  std::size_t corrections = 0;  // samples where a 2 pi correction was added
  /// Samples whose unwrapped increment departs from the median increment by
  /// more than pi/2.
  std::vector<std::size_t> discontinuities;

  bool discontinuous() const { return !discontinuities.empty(); }
};

/// Same semantics as numpy.unwrap with the default pi threshold, plus the
/// discontinuity detector.
UnwrapResult unwrap_phase(std::span<const double> wrapped);

/// Smallest 7-smooth integer >= n.
std::size_t next_fast_size(std::size_t n);

}  // namespace fidmag
