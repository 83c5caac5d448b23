#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "fidmag/fieldmodel.hpp"
#include "fidmag/physics.hpp"

namespace fidmag {

struct PhaseSeries {
  std::vector<double> phase;    // rad, unwrapped
  double fs_hz = 0.0;
  double t0_s = 0.0;            // time of phase[0]
  std::vector<double> weights;  // optional, >= 0

  double time(std::size_t i) const { return t0_s + static_cast<double>(i) / fs_hz; }
  double duration() const { return static_cast<double>(phase.size()) / fs_hz; }
};

void validate(const PhaseSeries& p);

/// Cumulative trapezoid of the Larmor frequency of each field sample;
/// phase[0] = 0.
PhaseSeries integrate_larmor_phase(const FieldTrace& trace, const AtomicSpecies& s,
                                   const MicrowaveDressing& dressing = {});

struct DecayModel {
  double a0_v = 1.0;
  double lifetime_s = 0.530;  // infinity disables the decay
};

void validate(const DecayModel& d);

/// Record layout: [detector-only][probe-on][FID]; offsets are sample indices.
struct Segments {
  std::uint64_t detector_only = 0;
  std::uint64_t probe_on = 0;
  std::uint64_t fid = 0;
};

struct RecordMeta {
  double a0_v = 0.0;
  double lifetime_s = 0.0;
  double sigma_v = 0.0;
  double detector_sigma_v = 0.0;
  double full_scale_v = 0.0;
  std::size_t clipped_samples = 0;
  bool clip_warning = false;  // clipped fraction > 1e-6
};

struct PolarimeterRecord {
  std::vector<double> volts;         // dequantised samples
  std::vector<std::int32_t> codes;   // empty in float mode (bit_depth 0)
  double fs_hz = 5e6;
  int bit_depth = 16;
  double scale_v_per_code = 0.0;
  Segments segments;
  double phi0_rad = 0.0;
  RecordMeta meta;

  std::size_t size() const { return volts.size(); }
  std::size_t fid_length() const { return volts.size() - segments.fid; }
};

struct SynthesisOptions {
  double sigma_v = 0.0;            // photon shot noise (probe on)
  double detector_fraction = 0.1;  // detector-only noise as a fraction of sigma
  double phi0_rad = 0.0;
  int bit_depth = 16;              // 0 = float mode, no quantisation
  double full_scale_v = 0.0;       // 0 = 4 * A0
  double detector_only_s = 0.05;
  double probe_on_s = 0.05;
  std::uint64_t noise_seed = 0;
};

/// A0 exp(-t/lifetime) sin(phi + phi0) + noise, preceded by the two pre-tip
/// noise segments, then quantised to bit_depth over +-full_scale.
PolarimeterRecord synthesize_polarimeter_record(const PhaseSeries& phase,
                                                const DecayModel& decay,
                                                const SynthesisOptions& opt);

/// sigma giving the requested initial full-bandwidth SNR A0^2 / (2 sigma^2).
double sigma_for_snr(double a0_v, double snr);

struct SnrSeries {
  std::vector<double> time_s;  // window centres, relative to the FID start
  std::vector<double> snr;
};

/// Windowed SNR estimate: A^2 from the mean analytic-signal power minus the
/// noise contribution 2 sigma^2, sigma^2 from the probe-on segment.
SnrSeries full_bandwidth_snr(const PolarimeterRecord& record, double window_s);

}  // namespace fidmag
