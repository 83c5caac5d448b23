#include "fidmag/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fidmag/errors.hpp"

namespace fidmag {

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kSingleShot: return "single_shot";
    case ExperimentKind::kCrlbSweep: return "crlb_sweep";
    case ExperimentKind::kFringeHop: return "fringe_hop";
    case ExperimentKind::kFfc: return "ffc";
    case ExperimentKind::kHarmonicRecovery: return "harmonic_recovery";
  }
  return "single_shot";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::kSingleShot, ExperimentKind::kCrlbSweep,
                 ExperimentKind::kFringeHop, ExperimentKind::kFfc,
                 ExperimentKind::kHarmonicRecovery}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorKind::kValidation, "unknown experiment '" + s + "'");
}

namespace {

std::string noise_model_name(PhaseNoiseModel m) {
  return m == PhaseNoiseModel::kShotLimitedBand ? "shot_limited_band" : "independent_samples";
}

PhaseNoiseModel noise_model_from(const std::string& s) {
  if (s == "shot_limited_band") return PhaseNoiseModel::kShotLimitedBand;
  if (s == "independent_samples") return PhaseNoiseModel::kIndependentSamples;
  fail(ErrorKind::kValidation, "unknown noise_model '" + s + "'");
}

// Reads keys from one mapping and rejects the ones nobody asked for.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    require(!node_ || node_.IsNull() || node_.IsMap(), ErrorKind::kValidation,
            "config: '" + path_ + "' must be a mapping");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0 || !node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        fail(ErrorKind::kValidation, "config: unknown key '" + path_ + key + "'");
      }
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap() || !node_[key]) return;
    try {
      out = node_[key].template as<T>();
    } catch (const YAML::Exception& e) {
      fail(ErrorKind::kValidation,
           "config: bad value for '" + path_ + key + "': " + e.what());
    }
  }

  YAML::Node child(const char* key) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap()) return YAML::Node();
    return node_[key];
  }

  std::string path(const char* key) const { return path_ + key + "."; }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<Harmonic> parse_harmonics(const YAML::Node& node, const std::string& path) {
  std::vector<Harmonic> out;
  if (!node || node.IsNull()) return out;
  require(node.IsSequence(), ErrorKind::kValidation, "config: '" + path + "' must be a list");
  for (const auto& item : node) {
    Harmonic h;
    Section s(item, path + "[].");
    s.get("frequency_hz", h.frequency_hz);
    s.get("rms_t", h.rms_t);
    s.get("phase_rad", h.phase_rad);
    out.push_back(h);
  }
  return out;
}

void emit_harmonics(YAML::Emitter& e, const std::vector<Harmonic>& hs) {
  e << YAML::Key << "harmonics" << YAML::Value << YAML::BeginSeq;
  for (const auto& h : hs) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "frequency_hz" << YAML::Value
      << h.frequency_hz << YAML::Key << "rms_t" << YAML::Value << h.rms_t << YAML::Key
      << "phase_rad" << YAML::Value << h.phase_rad << YAML::EndMap;
  }
  e << YAML::EndSeq;
}

template <typename T>
void kv(YAML::Emitter& e, const char* key, const T& v) {
  e << YAML::Key << key << YAML::Value << v;
}

void kv_list(YAML::Emitter& e, const char* key, const std::vector<double>& v) {
  e << YAML::Key << key << YAML::Value << YAML::Flow << v;
}

}  // namespace

MicrowaveDressing resolve_dressing(const Scenario& s) {
  MicrowaveDressing d;
  d.enabled = s.dressing.enabled;
  d.rabi_frequency = kTwoPi * s.dressing.rabi_hz;
  d.detuning = kTwoPi * s.dressing.detuning_hz;
  if (d.enabled && s.dressing.null_at_b0) {
    d = null_quadratic(s.species, s.field.b0_t, d, NullParameter::kRabi);
  }
  validate(d);
  return d;
}

void validate(const Scenario& s) {
  require(s.trials >= 1, ErrorKind::kValidation, "scenario: trials must be >= 1");
  validate(s.species);
  validate(s.field);
  validate(s.decay);
  const auto& r = s.record;
  require(r.fs_hz > 0.0, ErrorKind::kValidation, "record: fs_hz must be > 0");
  require(r.bit_depth == 0 || (r.bit_depth >= 8 && r.bit_depth <= 32),
          ErrorKind::kValidation, "record: bit_depth must be 0 or 8..32");
  require(r.fid_duration_s > 0.0 && r.detector_only_s >= 0.0 && r.probe_on_s >= 0.0,
          ErrorKind::kValidation, "record: durations must be positive");
  require(std::isfinite(r.initial_snr_db), ErrorKind::kValidation,
          "record: initial_snr_db must be finite");
  require(r.full_scale_v >= 0.0 && r.detector_fraction >= 0.0, ErrorKind::kValidation,
          "record: full_scale_v and detector_fraction must be >= 0");
  require(s.reconstruction.band_hz > 0.0 && s.reconstruction.order >= 1 &&
              s.reconstruction.order <= 12 && s.reconstruction.envelope_smoothing_s >= 0.0,
          ErrorKind::kValidation, "reconstruction: invalid band, order or smoothing");
  if (s.field.b0_t >= kFieldGuardT) {
    fail(ErrorKind::kValidation, "field: b0_t beyond the physics guard");
  }
  resolve_dressing(s);
  CompensationField c = s.compensation;
  c.line_frequency_hz = s.field.line_frequency_hz;
  c.line_drift_hz = s.field.line_drift_hz;
  validate(c);
  require(!s.crlb.snr_grid_db.empty() && s.crlb.fit_samples >= 100 && s.crlb.band_hz > 0.0,
          ErrorKind::kValidation, "crlb: empty grid, too few samples or bad band");
  require(s.fringe_hop.fs_hz > 0.0, ErrorKind::kValidation, "fringe_hop: fs_hz must be > 0");
  for (double t : s.fringe_hop.tau_grid_s) {
    require(t > 0.0, ErrorKind::kValidation, "fringe_hop: tau values must be > 0");
  }
  require(s.ffc.n_harmonics >= 1 && s.ffc.calibration_band_hz > 0.0 &&
              s.ffc.calibration_duration_s > 0.0 &&
              s.ffc.compensated_band_hz > 0.0 && s.ffc.noise_f_max_hz > 0.0 &&
              s.ffc.psd_resolution_hz > 0.0,
          ErrorKind::kValidation, "ffc: invalid settings");
  require(s.harmonic_recovery.n_harmonics >= 1 && s.harmonic_recovery.band_hz > 0.0,
          ErrorKind::kValidation, "harmonic_recovery: invalid settings");
  require(s.single_shot.knee_window_s > 0.0 && s.single_shot.knee_band_hz > 0.0 &&
              s.single_shot.knee_f_hi_hz > s.single_shot.knee_f_lo_hz,
          ErrorKind::kValidation, "single_shot: invalid knee settings");
}

Scenario parse_scenario(const YAML::Node& root) {
  require(root && root.IsMap(), ErrorKind::kValidation, "config: top level must be a mapping");
  Scenario s;
  s.species = rubidium87();
  {
    Section top(root, "");
    top.get("name", s.name);
    std::string kind = to_string(s.kind);
    top.get("experiment", kind);
    s.kind = experiment_kind_from_string(kind);
    if (auto n = top.child("seed"); n && !n.IsNull()) {
      try {
        s.seed = n.as<std::uint64_t>();
      } catch (const YAML::Exception&) {
        fail(ErrorKind::kValidation, "config: seed must be a non-negative integer");
      }
    }
    long long trials = static_cast<long long>(s.trials);
    top.get("trials", trials);
    require(trials >= 1, ErrorKind::kValidation, "scenario: trials must be >= 1");
    s.trials = static_cast<std::size_t>(trials);
    top.get("species_file", s.species_file);
    if (!s.species_file.empty()) s.species = load_species(s.species_file);

    {
      Section f(top.child("field"), "field.");
      f.get("b0_t", s.field.b0_t);
      f.get("white_asd_t_rthz", s.field.white_asd_t_rthz);
      f.get("line_frequency_hz", s.field.line_frequency_hz);
      f.get("line_drift_hz", s.field.line_drift_hz);
      std::string preset = "none";
      f.get("harmonics_preset", preset);
      if (preset == "laboratory") {
        s.field.harmonics = laboratory_harmonics();
      } else {
        require(preset == "none", ErrorKind::kValidation,
                "config: harmonics_preset must be 'none' or 'laboratory'");
      }
      auto extra = parse_harmonics(f.child("harmonics"), "field.harmonics");
      s.field.harmonics.insert(s.field.harmonics.end(), extra.begin(), extra.end());
    }
    {
      Section d(top.child("dressing"), "dressing.");
      d.get("enabled", s.dressing.enabled);
      d.get("rabi_hz", s.dressing.rabi_hz);
      d.get("detuning_hz", s.dressing.detuning_hz);
      d.get("null_at_b0", s.dressing.null_at_b0);
    }
    {
      Section d(top.child("decay"), "decay.");
      d.get("a0_v", s.decay.a0_v);
      d.get("lifetime_s", s.decay.lifetime_s);
    }
    {
      auto& r = s.record;
      Section d(top.child("record"), "record.");
      d.get("fs_hz", r.fs_hz);
      d.get("bit_depth", r.bit_depth);
      d.get("fid_duration_s", r.fid_duration_s);
      d.get("detector_only_s", r.detector_only_s);
      d.get("probe_on_s", r.probe_on_s);
      d.get("initial_snr_db", r.initial_snr_db);
      d.get("full_scale_v", r.full_scale_v);
      d.get("detector_fraction", r.detector_fraction);
      d.get("random_phi0", r.random_phi0);
      d.get("phi0_rad", r.phi0_rad);
    }
    {
      auto& r = s.reconstruction;
      Section d(top.child("reconstruction"), "reconstruction.");
      d.get("band_hz", r.band_hz);
      d.get("center_hz", r.center_hz);
      d.get("order", r.order);
      d.get("edge_guard_samples", r.edge_guard);
      d.get("envelope_smoothing_s", r.envelope_smoothing_s);
    }
    {
      Section d(top.child("estimator"), "estimator.");
      std::string model = noise_model_name(s.estimator.noise_model);
      d.get("noise_model", model);
      s.estimator.noise_model = noise_model_from(model);
      d.get("use_weights", s.estimator.use_weights);
    }
    {
      auto& c = s.compensation;
      Section d(top.child("compensation"), "compensation.");
      d.get("time_constant_s", c.time_constant_s);
      d.get("max_amplitude_t", c.max_amplitude_t);
      d.get("bandwidth_limit_hz", c.bandwidth_limit_hz);
      d.get("trigger_phase_error_rad", c.trigger_phase_error_rad);
      d.get("retrigger_each_cycle", c.retrigger_each_cycle);
      d.get("actuator_dynamics", c.actuator_dynamics);
    }
    {
      auto& c = s.single_shot;
      Section d(top.child("single_shot"), "single_shot.");
      d.get("knee_window_s", c.knee_window_s);
      d.get("knee_band_hz", c.knee_band_hz);
      d.get("knee_psd_resolution_hz", c.knee_psd_resolution_hz);
      d.get("knee_f_lo_hz", c.knee_f_lo_hz);
      d.get("knee_f_hi_hz", c.knee_f_hi_hz);
      d.get("knee_trials", c.knee_trials);
    }
    {
      auto& c = s.crlb;
      Section d(top.child("crlb"), "crlb.");
      d.get("snr_grid_db", c.snr_grid_db);
      d.get("fit_samples", c.fit_samples);
      d.get("band_hz", c.band_hz);
    }
    {
      auto& c = s.fringe_hop;
      Section d(top.child("fringe_hop"), "fringe_hop.");
      d.get("tau_grid_s", c.tau_grid_s);
      d.get("fs_hz", c.fs_hz);
    }
    {
      auto& c = s.ffc;
      Section d(top.child("ffc"), "ffc.");
      d.get("calibration_duration_s", c.calibration_duration_s);
      d.get("calibration_band_hz", c.calibration_band_hz);
      d.get("compensated_band_hz", c.compensated_band_hz);
      d.get("n_harmonics", c.n_harmonics);
      d.get("noise_f_max_hz", c.noise_f_max_hz);
      d.get("psd_resolution_hz", c.psd_resolution_hz);
    }
    {
      auto& c = s.harmonic_recovery;
      Section d(top.child("harmonic_recovery"), "harmonic_recovery.");
      d.get("n_harmonics", c.n_harmonics);
      d.get("band_hz", c.band_hz);
    }
  }
  s.compensation.line_frequency_hz = s.field.line_frequency_hz;
  s.compensation.line_drift_hz = s.field.line_drift_hz;
  validate(s);
  return s;
}

Scenario parse_scenario_text(const std::string& yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::kValidation, std::string("config: ") + e.what());
  }
  return parse_scenario(root);
}

Scenario load_scenario(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    fail(ErrorKind::kIo, "cannot read config " + path.string());
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::kValidation, "config " + path.string() + ": " + e.what());
  }
  // Species files are resolved relative to the config file.
  if (root.IsMap() && root["species_file"]) {
    std::filesystem::path sp = root["species_file"].as<std::string>();
    if (!sp.empty() && sp.is_relative()) {
      root["species_file"] = (path.parent_path() / sp).lexically_normal().string();
    }
  }
  return parse_scenario(root);
}

std::string scenario_to_yaml(const Scenario& s) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  kv(e, "name", s.name);
  kv(e, "experiment", to_string(s.kind));
  e << YAML::Key << "seed" << YAML::Value;
  if (s.seed) {
    e << *s.seed;
  } else {
    e << YAML::Null;
  }
  kv(e, "trials", static_cast<unsigned long long>(s.trials));
  kv(e, "species_file", s.species_file);

  e << YAML::Key << "field" << YAML::Value << YAML::BeginMap;
  kv(e, "b0_t", s.field.b0_t);
  kv(e, "white_asd_t_rthz", s.field.white_asd_t_rthz);
  kv(e, "line_frequency_hz", s.field.line_frequency_hz);
  kv(e, "line_drift_hz", s.field.line_drift_hz);
  kv(e, "harmonics_preset", std::string("none"));
  emit_harmonics(e, s.field.harmonics);
  e << YAML::EndMap;

  e << YAML::Key << "dressing" << YAML::Value << YAML::BeginMap;
  kv(e, "enabled", s.dressing.enabled);
  kv(e, "rabi_hz", s.dressing.rabi_hz);
  kv(e, "detuning_hz", s.dressing.detuning_hz);
  kv(e, "null_at_b0", s.dressing.null_at_b0);
  e << YAML::EndMap;

  e << YAML::Key << "decay" << YAML::Value << YAML::BeginMap;
  kv(e, "a0_v", s.decay.a0_v);
  kv(e, "lifetime_s", s.decay.lifetime_s);
  e << YAML::EndMap;

  const auto& r = s.record;
  e << YAML::Key << "record" << YAML::Value << YAML::BeginMap;
  kv(e, "fs_hz", r.fs_hz);
  kv(e, "bit_depth", r.bit_depth);
  kv(e, "fid_duration_s", r.fid_duration_s);
  kv(e, "detector_only_s", r.detector_only_s);
  kv(e, "probe_on_s", r.probe_on_s);
  kv(e, "initial_snr_db", r.initial_snr_db);
  kv(e, "full_scale_v", r.full_scale_v);
  kv(e, "detector_fraction", r.detector_fraction);
  kv(e, "random_phi0", r.random_phi0);
  kv(e, "phi0_rad", r.phi0_rad);
  e << YAML::EndMap;

  const auto& rc = s.reconstruction;
  e << YAML::Key << "reconstruction" << YAML::Value << YAML::BeginMap;
  kv(e, "band_hz", rc.band_hz);
  kv(e, "center_hz", rc.center_hz);
  kv(e, "order", rc.order);
  kv(e, "edge_guard_samples", static_cast<unsigned long long>(rc.edge_guard));
  kv(e, "envelope_smoothing_s", rc.envelope_smoothing_s);
  e << YAML::EndMap;

  e << YAML::Key << "estimator" << YAML::Value << YAML::BeginMap;
  kv(e, "noise_model", noise_model_name(s.estimator.noise_model));
  kv(e, "use_weights", s.estimator.use_weights);
  e << YAML::EndMap;

  const auto& c = s.compensation;
  e << YAML::Key << "compensation" << YAML::Value << YAML::BeginMap;
  kv(e, "time_constant_s", c.time_constant_s);
  kv(e, "max_amplitude_t", c.max_amplitude_t);
  kv(e, "bandwidth_limit_hz", c.bandwidth_limit_hz);
  kv(e, "trigger_phase_error_rad", c.trigger_phase_error_rad);
  kv(e, "retrigger_each_cycle", c.retrigger_each_cycle);
  kv(e, "actuator_dynamics", c.actuator_dynamics);
  e << YAML::EndMap;

  const auto& ss = s.single_shot;
  e << YAML::Key << "single_shot" << YAML::Value << YAML::BeginMap;
  kv(e, "knee_window_s", ss.knee_window_s);
  kv(e, "knee_band_hz", ss.knee_band_hz);
  kv(e, "knee_psd_resolution_hz", ss.knee_psd_resolution_hz);
  kv(e, "knee_f_lo_hz", ss.knee_f_lo_hz);
  kv(e, "knee_f_hi_hz", ss.knee_f_hi_hz);
  kv(e, "knee_trials", static_cast<unsigned long long>(ss.knee_trials));
  e << YAML::EndMap;

  e << YAML::Key << "crlb" << YAML::Value << YAML::BeginMap;
  kv_list(e, "snr_grid_db", s.crlb.snr_grid_db);
  kv(e, "fit_samples", static_cast<unsigned long long>(s.crlb.fit_samples));
  kv(e, "band_hz", s.crlb.band_hz);
  e << YAML::EndMap;

  e << YAML::Key << "fringe_hop" << YAML::Value << YAML::BeginMap;
  kv_list(e, "tau_grid_s", s.fringe_hop.tau_grid_s);
  kv(e, "fs_hz", s.fringe_hop.fs_hz);
  e << YAML::EndMap;

  e << YAML::Key << "ffc" << YAML::Value << YAML::BeginMap;
  kv(e, "calibration_duration_s", s.ffc.calibration_duration_s);
  kv(e, "calibration_band_hz", s.ffc.calibration_band_hz);
  kv(e, "compensated_band_hz", s.ffc.compensated_band_hz);
  kv(e, "n_harmonics", s.ffc.n_harmonics);
  kv(e, "noise_f_max_hz", s.ffc.noise_f_max_hz);
  kv(e, "psd_resolution_hz", s.ffc.psd_resolution_hz);
  e << YAML::EndMap;

  e << YAML::Key << "harmonic_recovery" << YAML::Value << YAML::BeginMap;
  kv(e, "n_harmonics", s.harmonic_recovery.n_harmonics);
  kv(e, "band_hz", s.harmonic_recovery.band_hz);
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

Scenario laboratory_scenario() {
  Scenario s;
  s.name = "laboratory";
  s.kind = ExperimentKind::kSingleShot;
  s.seed = 20240611;
  s.species = rubidium87();
  s.field.b0_t = 86.0121261e-6;
  s.field.white_asd_t_rthz = 250e-12;
  s.dressing.enabled = true;
  s.dressing.detuning_hz = -150e3;
  s.dressing.null_at_b0 = true;
  return s;
}

}  // namespace fidmag
