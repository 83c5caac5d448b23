#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fidmag/estimation.hpp"
#include "fidmag/fieldmodel.hpp"
#include "fidmag/reconstruct.hpp"
#include "fidmag/scenario.hpp"
#include "fidmag/signalsim.hpp"
#include "fidmag/spectrum.hpp"

namespace fidmag {

struct Aggregate {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

/// Summary statistics over the finite entries of `v`.
Aggregate aggregate(std::vector<double> v);

struct TrialRow {
  std::uint64_t trial = 0;  // replay key together with the base seed
  std::uint64_t seed = 0;   // field-noise seed derived from (base, trial)
  std::vector<double> values;
  bool ok = true;
  std::string error;
  double runtime_s = 0.0;
};

struct EnsembleReport {
  std::string experiment;
  std::string scenario;
  std::uint64_t base_seed = 0;
  std::vector<std::string> columns;
  std::vector<TrialRow> rows;
  nlohmann::json summary;  // experiment-specific results

  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name, bool ok_only = true) const;
  Aggregate aggregate(const std::string& name) const;
  std::size_t failures() const;
  nlohmann::json to_json() const;  // summary + aggregates, no rows
  void write_csv(const std::filesystem::path& path) const;
};

/// One simulated shot: the field, its noiseless phase and the digitised record.
struct ShotRealization {
  FieldTrace field;
  PhaseSeries truth;
  PolarimeterRecord record;
  MicrowaveDressing dressing;
};

/// Trial keys address independent random streams; shot distinguishes the
/// calibration (0) and compensated (1) shots of a feed-forward cycle.
std::uint64_t trial_key(std::uint64_t trial, std::uint64_t shot = 0);

ShotRealization simulate_shot(const Scenario& s, std::uint64_t key,
                              const FieldTrace* added_field = nullptr);

struct SingleShotOptions {
  bool knee = true;
  bool residual_psd = false;
  bool snr_trace = false;
  double snr_window_s = 0.01;
};

struct SingleShotResult {
  DcEstimate estimate;
  double b_true_t = 0.0;  // weighted fit of the noiseless phase on the same samples
  double b0_t = 0.0;
  double center_hz = 0.0;
  double enbw_hz = 0.0;
  std::size_t edge_guard = 0;
  std::size_t unwrap_corrections = 0;
  bool knee_computed = false;
  PhaseNoiseFit knee;
  SpectrumEstimate knee_psd;      // early-window, wide-band residual PSD
  SpectrumEstimate residual_psd;  // residuals of the main fit
  SnrSeries snr;
  std::size_t clipped_samples = 0;
};

/// Reconstruct + fit a record. `truth` (optional) supplies B_true.
SingleShotResult analyse_single_shot(const Scenario& s, const PolarimeterRecord& record,
                                     const MicrowaveDressing& dressing,
                                     const PhaseSeries* truth,
                                     const SingleShotOptions& opt = {});

SingleShotResult run_single_shot_pipeline(const Scenario& s, std::uint64_t trial,
                                          const SingleShotOptions& opt = {});

struct FringeHopPoint {
  double tau_s = 0.0;
  double fs_hz = 0.0;
  std::size_t trials = 0;
  std::size_t hops = 0;
  double hop_fraction = 0.0;
  double ci_low = 0.0;  // Wilson 95%
  double ci_high = 0.0;
  double sigma_phi = 0.0;
  double sigma_phi_model = 0.0;
  double hop_fraction_model = 0.0;  // Gaussian tail 2 Phi(-pi / (2 sigma))
};

/// Default grid: tau_c(2) x {0.01, 0.25, 0.5, 1, 2}.
std::vector<double> default_tau_grid(const Scenario& s);

std::vector<FringeHopPoint> run_fringe_hop_mc(const Scenario& s,
                                              const std::vector<double>& tau_grid_s,
                                              EnsembleReport* report = nullptr);

/// Ramsey phase of one trial: integrated Larmor phase minus the nominal one.
double fringe_hop_phase(const Scenario& s, double tau_s, double fs_hz, std::uint64_t key);

struct CrlbPoint {
  double snr_db = 0.0;
  std::size_t trials = 0;
  std::size_t n_fit = 0;
  double empirical_variance = 0.0;  // (rad/s)^2
  double crlb_variance = 0.0;
  double ratio = 0.0;
  double ratio_ci_low = 0.0;  // 95%, chi-square
  double ratio_ci_high = 0.0;
  double mean_error = 0.0;    // rad/s
  std::size_t discontinuous = 0;
};

struct CrlbSweep {
  std::vector<CrlbPoint> points;
  double threshold_db = 0.0;            // passband budget for the band
  double empirical_threshold_db = 0.0;  // ratio crossing 2 (NaN if none)
  double carrier_hz = 0.0;
};

CrlbSweep run_crlb_sweep(const Scenario& s, const std::vector<double>& snr_grid_db,
                         EnsembleReport* report = nullptr);

/// Frequency error (rad/s) of one CRLB trial; sets `discontinuous`.
double crlb_trial(const Scenario& s, double snr_db, std::uint64_t key, bool* discontinuous);

struct FfcResult {
  HarmonicFit calibration;
  HarmonicFit residual;  // harmonics left in the compensated shot
  double before_t = 0.0;
  double after_t = 0.0;
  double suppression_db = 0.0;
  std::vector<double> harmonic_suppression_db;
  SpectrumEstimate before_psd;  // T^2/Hz
  SpectrumEstimate after_psd;
  std::size_t compensation_clipped = 0;
};

FfcResult run_ffc_cycle(const Scenario& s, std::uint64_t trial);

HarmonicFit run_harmonic_recovery(const Scenario& s, std::uint64_t trial);

/// Runs `s.trials` trials of the scenario's experiment on a worker pool.
EnsembleReport run_ensemble(const Scenario& s, unsigned threads = 0);

/// Recomputes one report row from the base seed and trial key.
TrialRow replay_trial(const Scenario& s, std::uint64_t trial);

/// Critical time tau_c(2) for the scenario's white field noise.
double scenario_critical_time(const Scenario& s);

}  // namespace fidmag
