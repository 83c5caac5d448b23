#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fidmag {

/// One line-synchronous component, B = sqrt(2) * rms * sin(2 pi f t + phase).
struct Harmonic {
  double frequency_hz = 0.0;
  double rms_t = 0.0;
  double phase_rad = 0.0;
};

struct FieldModel {
  double b0_t = 0.0;
  double white_asd_t_rthz = 0.0;  // s_B; S_BB = s_B^2
  std::vector<Harmonic> harmonics;
  double line_frequency_hz = 50.0;
  /// Grid-frequency offset for this realisation; harmonic k runs at
  /// f_k + k * line_drift_hz, with k = round(f_k / line_frequency_hz).
  double line_drift_hz = 0.0;
  std::uint64_t seed = 0;
};

void validate(const FieldModel& m);

struct FieldTrace {
  std::vector<double> samples;  // T
  double fs_hz = 0.0;
  double duration_s = 0.0;
  std::uint64_t model_hash = 0;
  std::uint64_t seed = 0;
  std::size_t clipped_samples = 0;

  double time(std::size_t i) const { return static_cast<double>(i) / fs_hz; }
};

/// (50, 150, 250) Hz at (41.92, 10.88, 2.0) nT rms. The phases are arbitrary
/// but fixed: 0.3, 1.1 and 2.0 rad.
std::vector<Harmonic> laboratory_harmonics();

/// Harmonic order of f relative to the line frequency (at least 1).
int harmonic_order(double frequency_hz, double line_frequency_hz);

/// B0 + harmonics + i.i.d. Gaussian noise of variance S_BB * fs / 2.
/// Deterministic in model.seed; the noise draws do not depend on the
/// harmonic list.
FieldTrace sample_field_trace(const FieldModel& model, double fs_hz,
                              double duration_s);

/// Deterministic part of sample_field_trace (no B0, no noise).
double harmonic_field(const FieldModel& model, double t);

struct CompensationField {
  std::vector<Harmonic> harmonics;  // interference to cancel (usually a fit)
  double time_constant_s = 40e-6;
  double max_amplitude_t = 6.61e-6;
  double bandwidth_limit_hz = 1e4;
  /// Trigger timing error expressed as a phase at the fundamental; harmonic
  /// k sees k times this value.
  double trigger_phase_error_rad = 0.0;
  /// Nominal line frequency; the stored waveform runs at k times this.
  double line_frequency_hz = 50.0;
  /// Actual grid offset during the compensated shot. It only moves the
  /// trigger instants: the waveform restarts at each line cycle, of period
  /// 1/(line_frequency_hz + line_drift_hz), so phase error builds up within
  /// a cycle and is reset by the next trigger.
  double line_drift_hz = 0.0;
  bool retrigger_each_cycle = true;
  /// When false the actuator is ideal: no lag and no clipping.
  bool actuator_dynamics = true;
};

void validate(const CompensationField& c);

/// Single-pole low-pass (bilinear discretisation, unity dc gain) followed by
/// clipping at +-max_amplitude. Clipped samples are counted on the trace.
FieldTrace apply_actuator(const FieldTrace& ideal, const CompensationField& comp);

/// Anti-phase replica of comp.harmonics referenced to the line trigger
/// (t = 0 is a trigger) and passed through the actuator. The actuator is run over a pre-roll so
/// the output is in periodic steady state from the first sample.
FieldTrace compensation_waveform(const CompensationField& comp, double fs_hz,
                                 double duration_s);

/// Pointwise sum of two traces on the same grid.
FieldTrace add_traces(const FieldTrace& a, const FieldTrace& b);

}  // namespace fidmag
