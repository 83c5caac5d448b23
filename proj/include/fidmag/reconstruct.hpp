#pragma once

#include <cstddef>
#include <vector>

#include "fidmag/filter.hpp"
#include "fidmag/signalsim.hpp"

namespace fidmag {

struct ReconstructionOptions {
  double band_hz = 500.0;
  double center_hz = 0.0;  // <= 0: locate the carrier automatically
  int order = 6;
  std::size_t edge_guard = 0;  // 0: filter's own guard
  double envelope_smoothing_s = 0.01;
};

struct Reconstruction {
  /// Unwrapped phase on the FID segment with the edge guard removed;
  /// weights are the per-sample SNR estimate A_i^2 / (2 sigma^2).
  PhaseSeries phase;
  std::vector<double> envelope;  // |V_a| on the same samples
  double center_hz = 0.0;
  double enbw_hz = 0.0;
  double sigma_v = 0.0;          // probe-on noise estimate (0 if no segment)
  std::size_t edge_guard = 0;
  std::size_t unwrap_corrections = 0;
  std::vector<std::size_t> discontinuities;  // indices into `phase`

  bool discontinuous() const { return !discontinuities.empty(); }
};

/// Carrier estimate: centroid of the FID spectrum in excess of the probe-on
/// noise spectrum, within half a band of its peak.
double locate_carrier(const PolarimeterRecord& record, double band_hz);

/// Bandpass, analytic signal, unwrap, and envelope-derived weights.
Reconstruction reconstruct_phase(const PolarimeterRecord& record,
                                 const ReconstructionOptions& opt = {});

/// Samples of `p` with time in [t_begin, t_end).
PhaseSeries slice(const PhaseSeries& p, double t_begin, double t_end);

}  // namespace fidmag
