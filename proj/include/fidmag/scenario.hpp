#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fidmag/estimation.hpp"
#include "fidmag/fieldmodel.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/reconstruct.hpp"
#include "fidmag/signalsim.hpp"
#include "fidmag/species.hpp"

namespace YAML {
class Node;
}

namespace fidmag {

enum class ExperimentKind { kSingleShot, kCrlbSweep, kFringeHop, kFfc, kHarmonicRecovery };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct RecordConfig {
  double fs_hz = 5e6;
  int bit_depth = 16;
  double fid_duration_s = 1.0;
  double detector_only_s = 0.05;
  double probe_on_s = 0.05;
  double initial_snr_db = -11.1;
  double full_scale_v = 0.0;  // 0: 4 * A0
  double detector_fraction = 0.1;
  bool random_phi0 = true;
  double phi0_rad = 0.0;  // used when random_phi0 is false
};

struct DressingConfig {
  bool enabled = false;
  double rabi_hz = 0.0;
  double detuning_hz = 0.0;
  bool null_at_b0 = false;  // solve the Rabi frequency that nulls q at b0
};

struct EstimatorConfig {
  PhaseNoiseModel noise_model = PhaseNoiseModel::kShotLimitedBand;
  bool use_weights = true;
};

struct SingleShotConfig {
  double knee_window_s = 0.2;
  double knee_band_hz = 5000.0;
  double knee_psd_resolution_hz = 10.0;
  double knee_f_lo_hz = 20.0;
  double knee_f_hi_hz = 2000.0;
  std::size_t knee_trials = 5;  // trials that also run the knee diagnostic
};

struct CrlbConfig {
  std::vector<double> snr_grid_db{-8.0, -5.0, -1.0, 3.0, -17.0};
  std::size_t fit_samples = 50000;
  double band_hz = 5000.0;
};

struct FringeHopConfig {
  std::vector<double> tau_grid_s;  // empty: tau_c(2) x {0.01, 0.25, 0.5, 1, 2}
  double fs_hz = 20000.0;
};

struct FfcConfig {
  double calibration_duration_s = 0.32;
  double calibration_band_hz = 5000.0;
  double compensated_band_hz = 500.0;
  int n_harmonics = 3;
  double noise_f_max_hz = 300.0;
  double psd_resolution_hz = 2.0;
};

struct HarmonicRecoveryConfig {
  int n_harmonics = 3;
  double band_hz = 5000.0;
};

struct Scenario {
  std::string name = "unnamed";
  ExperimentKind kind = ExperimentKind::kSingleShot;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 1;
  std::string species_file;  // empty: built-in Rb-87
  AtomicSpecies species;
  FieldModel field;
  DressingConfig dressing;
  DecayModel decay;
  RecordConfig record;
  ReconstructionOptions reconstruction;
  EstimatorConfig estimator;
  CompensationField compensation;  // harmonics come from the calibration fit
  SingleShotConfig single_shot;
  CrlbConfig crlb;
  FringeHopConfig fringe_hop;
  FfcConfig ffc;
  HarmonicRecoveryConfig harmonic_recovery;
};

/// Dressing in rad/s, with the nulling solve applied when requested.
MicrowaveDressing resolve_dressing(const Scenario& s);

void validate(const Scenario& s);

/// Parses a scenario; unknown keys are validation errors, absent keys take
/// the defaults above.
Scenario parse_scenario(const YAML::Node& root);
Scenario parse_scenario_text(const std::string& yaml);
Scenario load_scenario(const std::filesystem::path& path);

/// Full scenario with every default filled in.
std::string scenario_to_yaml(const Scenario& s);

/// Full-rate laboratory preset (86 uT bias, 5 MSa/s, dressed, 1 s FID).
Scenario laboratory_scenario();

}  // namespace fidmag
