#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fidmag/fieldmodel.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/signalsim.hpp"
#include "fidmag/spectrum.hpp"

namespace fidmag {

/// Phase-noise variance terms of a dc estimate. total = shot + field.
struct SensitivityBudget {
  double delta_phi_shot_sq = 0.0;   // rad^2
  double delta_phi_field_sq = 0.0;  // rad^2
  double corner_frequency_hz = 0.0;
  double s_shot = 0.0;              // rad^2/Hz

  double total_sq() const { return delta_phi_shot_sq + delta_phi_field_sq; }
};

/// Budget for known SNR and field noise: shot 1/SNR, field gamma^2 S_BB tau/(4 pi^2).
SensitivityBudget sensitivity_budget(double snr, double s_bb, double tau_s, double fs_hz,
                                     double gamma);

/// Fit of S(f) = R/f^2 + W to a phase PSD between f_lo and f_hi
/// (iteratively reweighted by the model, so relative errors are balanced).
struct PhaseNoiseFit {
  double field_coeff = 0.0;  // R, rad^2 Hz
  double white_level = 0.0;  // W, rad^2/Hz
  double corner_hz = 0.0;    // sqrt(R/W)
};

PhaseNoiseFit fit_phase_noise_model(const SpectrumEstimate& s, double f_lo_hz,
                                    double f_hi_hz);

enum class PhaseNoiseModel {
  /// Samples carry independent noise; sigma_omega from the residual scatter.
  kIndependentSamples,
  /// Band-limited reconstruction: weights are absolute per-sample SNR, the
  /// shot term follows from them and the field term from the residual PSD.
  kShotLimitedBand,
};

struct DcFitOptions {
  PhaseNoiseModel noise_model = PhaseNoiseModel::kIndependentSamples;
  bool use_weights = true;
  /// Residual-PSD settings for kShotLimitedBand (0 picks defaults: 10 Hz
  /// resolution or coarser, fit band [2 res, max(0.2 noise_bandwidth, 6 res)]).
  double noise_bandwidth_hz = 0.0;
  double psd_resolution_hz = 0.0;
  double psd_f_lo_hz = 0.0;
  double psd_f_hi_hz = 0.0;
  double invert_tol = kTwoPi * 1e-4;
};

struct DcEstimate {
  double B_est = 0.0;               // T
  double phi_est = 0.0;             // rad, phase at t = 0
  double omega_est = 0.0;           // rad/s
  double sigma_omega = 0.0;         // rad/s
  double delta_B_dc = 0.0;          // T, sigma_omega / gamma(B_est)
  double delta_B_detector = 0.0;    // T, shot term only (SNR form)
  std::vector<double> residuals;    // rad
  double delta_phi = 0.0;           // rad, per-sample equivalent at fs
  double weighted_mean_snr = 0.0;
  double gamma = 0.0;               // running gamma at B_est
  double tau_s = 0.0;
  std::size_t n_samples = 0;
  SensitivityBudget budget;
};

/// Weighted straight-line fit phi = omega t + phi0, B_est = invert_field(omega).
/// With uniform weights this is ordinary least squares.
DcEstimate fit_dc_phase(const PhaseSeries& phase, const AtomicSpecies& s,
                        const MicrowaveDressing& dressing = {},
                        const DcFitOptions& opt = {});

struct FittedHarmonic {
  double frequency_hz = 0.0;
  double rms_t = 0.0;
  double phase_rad = 0.0;  // field phase, B = sqrt2 a sin(2 pi f t + phase)
  double rms_uncertainty_t = 0.0;
  double phase_uncertainty_rad = 0.0;
};

struct HarmonicFit {
  std::vector<FittedHarmonic> harmonics;
  double line_frequency_hz = 0.0;
  double B_est = 0.0;
  double gamma = 0.0;
  double residual_rms = 0.0;  // rad

  std::vector<Harmonic> as_harmonics() const;
};

struct HarmonicFitOptions {
  double psd_resolution_hz = 0.0;  // 0: max(4/duration, 2 Hz)
  double local_half_width_hz = 25.0;
};

/// Least squares on {t, 1, sin(2 pi k f t), cos(2 pi k f t)} for the first
/// n_harmonics odd k. Uncertainties use the residual PSD near each harmonic,
/// so band-limited (correlated) noise is accounted for.
HarmonicFit fit_harmonics(const PhaseSeries& phase, double line_frequency_hz,
                          int n_harmonics, const AtomicSpecies& s,
                          const MicrowaveDressing& dressing = {},
                          const HarmonicFitOptions& opt = {});

/// pi^2 / (2 n^2 gamma0^2 S_BB).
double critical_time(double n_sigma, double s_bb, const AtomicSpecies& s);

struct RamseyOutcome {
  double inferred = 0.0;
  bool hop = false;
};

/// arcsin(sin(phi)); hop when phi, wrapped to (-pi, pi], exceeds pi/2 in magnitude.
RamseyOutcome ramsey_project(double phi);

struct PassbandBudget {
  double max_enbw_hz = 0.0;
  double threshold_snr_db = 0.0;
};

/// max ENBW = (fs/2) SNR / 10^(3/5); threshold for a band = 6 dB + 10 log10(2 band / fs).
double max_enbw(double snr, double fs_hz);
double threshold_snr_db(double band_hz, double fs_hz);
PassbandBudget passband_budget(double snr, double fs_hz, double band_hz);

/// gamma^2 S_BB / (4 pi^2 f^2) + 2 / (fs SNR).
double phase_noise_psd_model(double f_hz, double s_bb, double snr, double fs_hz,
                             double gamma);

/// Frequency at which the two terms of phase_noise_psd_model are equal.
double phase_noise_corner(double s_bb, double snr, double fs_hz, double gamma);

/// sqrt of the trapezoidal integral of a field PSD over [0, f_max].
double rms_noise_amplitude(const SpectrumEstimate& s, double f_max_hz);

/// (2 delta_phi / gamma tau^1.5) sqrt(3 / fs).
double dc_sensitivity_from_residuals(double delta_phi, double tau_s, double fs_hz,
                                     double gamma);

/// (1 / gamma tau^1.5) sqrt(12 / (fs SNR)).
double dc_sensitivity_from_snr(double snr, double tau_s, double fs_hz, double gamma);

/// 2 pi f / (gamma sqrt(fs tau SNR)); the sqrt(tau)-normalised value is
/// ac_sensitivity * sqrt(tau).
double ac_sensitivity(double f_hz, double snr, double fs_hz, double tau_s, double gamma);

/// 12 fs^2 / (SNR N (N^2 - 1)) in (rad/s)^2.
double crlb_frequency_variance(double snr, std::size_t n, double fs_hz);
/// Large-N form 12 fs^2 / (SNR N^3).
double crlb_frequency_variance_large_n(double snr, std::size_t n, double fs_hz);

inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double ratio_to_db(double r) { return 10.0 * std::log10(r); }

}  // namespace fidmag
