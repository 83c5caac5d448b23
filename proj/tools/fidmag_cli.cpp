// Batch command-line front end: simulate, reconstruct, estimate,
// calibrate-ffc, mc, spectra, physics.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "fidmag/errors.hpp"
#include "fidmag/estimation.hpp"
#include "fidmag/experiments.hpp"
#include "fidmag/fidr_io.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/reconstruct.hpp"
#include "fidmag/scenario.hpp"
#include "fidmag/spectrum.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fidmag;

namespace {

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kDomain:
    case ErrorKind::kRange:
    case ErrorKind::kValidation:
    case ErrorKind::kIo:
      return 2;
    default:
      return 3;
  }
}

void report_error(std::string_view kind, const std::string& message, int code) {
  json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << std::endl;
}

int verbosity = 0;

void note(const std::string& msg) {
  if (verbosity > 0) std::cerr << msg << '\n';
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::kIo,
          "output directory " + dir.string() + " is not writable");
}

void require_input(const fs::path& p) {
  require(fs::exists(p), ErrorKind::kIo, "input " + p.string() + " does not exist");
}

json number(double v) { return std::isfinite(v) ? json(v) : json(); }

json budget_json(const SensitivityBudget& b) {
  return {{"delta_phi_shot_sq", number(b.delta_phi_shot_sq)},
          {"delta_phi_field_sq", number(b.delta_phi_field_sq)},
          {"corner_frequency_hz", number(b.corner_frequency_hz)},
          {"s_shot", number(b.s_shot)}};
}

json estimate_json(const DcEstimate& e, bool with_residuals) {
  json j = {{"B_est", number(e.B_est)},
            {"phi_est", number(e.phi_est)},
            {"omega_est", number(e.omega_est)},
            {"sigma_omega", number(e.sigma_omega)},
            {"delta_B_dc", number(e.delta_B_dc)},
            {"delta_B_detector", number(e.delta_B_detector)},
            {"delta_phi", number(e.delta_phi)},
            {"weighted_mean_snr", number(e.weighted_mean_snr)},
            {"gamma", number(e.gamma)},
            {"tau_s", number(e.tau_s)},
            {"n_samples", e.n_samples},
            {"budget", budget_json(e.budget)}};
  if (with_residuals) j["residuals"] = e.residuals;
  return j;
}

json harmonic_fit_json(const HarmonicFit& f) {
  json arr = json::array();
  for (const auto& h : f.harmonics) {
    arr.push_back({{"frequency_hz", h.frequency_hz},
                   {"rms_t", h.rms_t},
                   {"phase_rad", h.phase_rad},
                   {"rms_uncertainty_t", h.rms_uncertainty_t},
                   {"phase_uncertainty_rad", h.phase_uncertainty_rad}});
  }
  return {{"harmonics", arr},
          {"line_frequency_hz", f.line_frequency_hz},
          {"B_est", f.B_est},
          {"gamma", f.gamma},
          {"residual_rms", f.residual_rms}};
}

void write_spectrum_csv(const fs::path& path, const SpectrumEstimate& s, const char* unit) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << "frequency_hz,psd_" << unit << "\n" << std::setprecision(12);
  for (std::size_t i = 0; i < s.psd.size(); ++i) {
    out << s.frequency_hz[i] << ',' << s.psd[i] << '\n';
  }
}

void write_snr_csv(const fs::path& path, const SnrSeries& s) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << "time_s,snr,snr_db\n" << std::setprecision(12);
  for (std::size_t i = 0; i < s.snr.size(); ++i) {
    out << s.time_s[i] << ',' << s.snr[i] << ','
        << (s.snr[i] > 0 ? 10.0 * std::log10(s.snr[i]) : -INFINITY) << '\n';
  }
}

// Scenario from --config, or the built-in laboratory preset, with overrides.
Scenario scenario_from(const std::string& config, std::optional<std::uint64_t> seed) {
  Scenario s;
  if (!config.empty()) {
    require_input(config);
    s = load_scenario(config);
  } else {
    s = laboratory_scenario();
    note("no --config given: using the built-in laboratory preset");
  }
  if (seed) s.seed = *seed;
  validate(s);
  return s;
}

void write_scenario_echo(const fs::path& path, const Scenario& s) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << scenario_to_yaml(s);
}

// Adds the scenario echo to a record's sidecar so defaulted values are visible.
void extend_sidecar(const fs::path& record, const Scenario& s, std::uint64_t trial) {
  const fs::path side = sidecar_path(record);
  json j;
  {
    std::ifstream in(side);
    in >> j;
  }
  j["scenario_yaml"] = scenario_to_yaml(s);
  j["base_seed"] = s.seed.value_or(0);
  j["trial"] = trial;
  write_json(side, j);
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string in;
  std::string out;
  double band_hz = 500.0;
  double center_hz = 0.0;
  int order = 6;
  std::uint64_t trial = 0;
  std::size_t trials = 0;
  unsigned threads = 0;
  std::optional<std::uint64_t> replay;
  std::string csv;
  bool residuals = false;
  double resolution_hz = 0.0;
  double snr_window_s = 0.01;
  // physics table
  double b_min_t = 0.0;
  double b_max_t = 200e-6;
  std::size_t points = 21;
  std::vector<double> b_grid;
  double rabi_hz = 0.0;
  double detuning_hz = 0.0;
  bool null_dressing = false;
  std::string species;
};

int cmd_simulate(const Options& o) {
  const Scenario s = scenario_from(o.config, o.seed);
  require(!o.out.empty(), ErrorKind::kValidation, "simulate: --out is required");
  const auto shot = simulate_shot(s, trial_key(o.trial));
  write_fidr(o.out, shot.record);
  extend_sidecar(o.out, s, o.trial);
  if (!o.csv.empty()) write_record_csv(o.csv, shot.record);
  note("wrote " + o.out);
  return 0;
}

// Scenario for a record: --config if given, else the one written into the
// record's sidecar by `simulate`, else the laboratory preset.
Scenario scenario_for_record(const Options& o) {
  if (o.config.empty()) {
    std::ifstream side(sidecar_path(o.in));
    if (side) {
      const auto j = json::parse(side, nullptr, false);
      if (!j.is_discarded() && j.contains("scenario_yaml")) {
        Scenario s = parse_scenario_text(j.at("scenario_yaml").get<std::string>());
        if (o.seed) s.seed = *o.seed;
        validate(s);
        note("using the scenario stored with the record");
        return s;
      }
    }
  }
  return scenario_from(o.config, o.seed);
}

ReconstructionOptions recon_options(const Options& o, const Scenario& s) {
  ReconstructionOptions r = s.reconstruction;
  r.band_hz = o.band_hz;
  r.center_hz = o.center_hz;
  r.order = o.order;
  return r;
}

int cmd_reconstruct(const Options& o) {
  require_input(o.in);
  require(!o.out.empty(), ErrorKind::kValidation, "reconstruct: --out is required");
  const Scenario s = scenario_for_record(o);
  const auto record = read_fidr(o.in);
  const auto opt = recon_options(o, s);
  const auto rec = reconstruct_phase(record, opt);
  std::ofstream out(o.out);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + o.out);
  out << "time_s,phase_rad,weight,envelope_v\n" << std::setprecision(15);
  for (std::size_t i = 0; i < rec.phase.phase.size(); ++i) {
    out << rec.phase.time(i) << ',' << rec.phase.phase[i] << ',' << rec.phase.weights[i] << ','
        << rec.envelope[i] << '\n';
  }
  json j = {{"center_hz", rec.center_hz},
            {"band_hz", opt.band_hz},
            {"order", opt.order},
            {"enbw_hz", rec.enbw_hz},
            {"sigma_v", rec.sigma_v},
            {"edge_guard", rec.edge_guard},
            {"unwrap_corrections", rec.unwrap_corrections},
            {"discontinuities", rec.discontinuities}};
  write_json(o.out + ".json", j);
  if (rec.discontinuous()) {
    fail(ErrorKind::kUnwrap, "phase discontinuity detected at " +
                                 std::to_string(rec.discontinuities.size()) + " sample(s)");
  }
  return 0;
}

int cmd_estimate(const Options& o) {
  require_input(o.in);
  require(!o.out.empty(), ErrorKind::kValidation, "estimate: --out is required");
  const Scenario s = scenario_for_record(o);
  const auto record = read_fidr(o.in);
  Scenario sc = s;
  sc.reconstruction = recon_options(o, s);
  SingleShotOptions so;
  so.knee = false;
  so.residual_psd = !o.csv.empty();
  const auto res = analyse_single_shot(sc, record, resolve_dressing(sc), nullptr, so);
  json j = estimate_json(res.estimate, o.residuals);
  j["options"] = {{"band_hz", sc.reconstruction.band_hz},
                  {"center_hz", res.center_hz},
                  {"order", sc.reconstruction.order},
                  {"enbw_hz", res.enbw_hz},
                  {"edge_guard", res.edge_guard},
                  {"envelope_smoothing_s", sc.reconstruction.envelope_smoothing_s},
                  {"noise_model", sc.estimator.noise_model == PhaseNoiseModel::kShotLimitedBand
                                      ? "shot_limited_band"
                                      : "independent_samples"},
                  {"use_weights", sc.estimator.use_weights},
                  {"species", sc.species.name},
                  {"dressing_enabled", sc.dressing.enabled}};
  write_json(o.out, j);
  if (!o.csv.empty()) write_spectrum_csv(o.csv, res.residual_psd, "rad2_per_hz");
  return 0;
}

int cmd_calibrate_ffc(const Options& o) {
  Scenario s = scenario_from(o.config, o.seed);
  require(!o.out.empty(), ErrorKind::kValidation, "calibrate-ffc: --out is required");
  ensure_dir(o.out);
  const auto r = run_ffc_cycle(s, o.trial);
  json j = {{"calibration", harmonic_fit_json(r.calibration)},
            {"residual", harmonic_fit_json(r.residual)},
            {"before_t", r.before_t},
            {"after_t", r.after_t},
            {"suppression_db", r.suppression_db},
            {"harmonic_suppression_db", r.harmonic_suppression_db},
            {"compensation_clipped", r.compensation_clipped}};
  const fs::path dir(o.out);
  write_json(dir / "ffc.json", j);
  write_spectrum_csv(dir / "before_psd.csv", r.before_psd, "t2_per_hz");
  write_spectrum_csv(dir / "after_psd.csv", r.after_psd, "t2_per_hz");
  write_scenario_echo(dir / "scenario.yaml", s);
  std::cout << std::fixed << std::setprecision(2) << "suppression " << r.suppression_db
            << " dB (" << r.before_t * 1e9 << " nT -> " << r.after_t * 1e9 << " nT)\n";
  return 0;
}

int cmd_mc(const Options& o) {
  require(!o.config.empty(), ErrorKind::kValidation, "mc: --config is required");
  Scenario s = scenario_from(o.config, o.seed);
  require(s.seed.has_value(), ErrorKind::kValidation,
          "mc: the scenario has no seed (set 'seed:' or pass --seed)");
  if (o.trials > 0) s.trials = o.trials;
  if (o.replay) {
    const auto row = replay_trial(s, *o.replay);
    json j = {{"trial", row.trial}, {"seed", row.seed}, {"ok", row.ok}, {"error", row.error}};
    json vals = json::array();
    for (double v : row.values) vals.push_back(number(v));
    j["values"] = vals;
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  require(!o.out.empty(), ErrorKind::kValidation, "mc: --out is required");
  ensure_dir(o.out);
  const auto report = run_ensemble(s, o.threads);
  const fs::path dir(o.out);
  report.write_csv(dir / "report.csv");
  write_json(dir / "report.json", report.to_json());
  write_scenario_echo(dir / "scenario.yaml", s);
  std::cout << report.to_json()["summary"].dump(2) << '\n';
  return report.failures() == report.rows.size() && !report.rows.empty() ? 3 : 0;
}

int cmd_spectra(const Options& o) {
  require_input(o.in);
  require(!o.out.empty(), ErrorKind::kValidation, "spectra: --out is required");
  ensure_dir(o.out);
  const Scenario s = scenario_for_record(o);
  const auto record = read_fidr(o.in);
  const fs::path dir(o.out);
  const std::span<const double> fid(record.volts.data() + record.segments.fid,
                                    record.fid_length());
  const double duration = static_cast<double>(fid.size()) / record.fs_hz;
  const double res = o.resolution_hz > 0 ? o.resolution_hz : std::max(2.0, 4.0 / duration);
  write_spectrum_csv(dir / "record_psd.csv", power_spectrum(fid, record.fs_hz, res),
                     "v2_per_hz");
  if (record.segments.probe_on < record.segments.fid) {
    write_snr_csv(dir / "snr.csv", full_bandwidth_snr(record, o.snr_window_s));
  }
  const auto rec = reconstruct_phase(record, recon_options(o, s));
  const MicrowaveDressing d = resolve_dressing(s);
  DcFitOptions fo;
  const auto est = fit_dc_phase(rec.phase, s.species, d, fo);
  write_spectrum_csv(dir / "residual_psd.csv",
                     power_spectrum(est.residuals, rec.phase.fs_hz, std::max(res, 10.0)),
                     "rad2_per_hz");
  const auto field = field_from_phase(rec.phase.phase, rec.phase.fs_hz, est.gamma);
  write_spectrum_csv(dir / "field_psd.csv", power_spectrum(field, rec.phase.fs_hz, res),
                     "t2_per_hz");
  if (rec.discontinuous()) note("warning: phase discontinuities in the reconstruction");
  return 0;
}

int cmd_physics(const Options& o) {
  AtomicSpecies sp = o.species.empty() ? rubidium87() : load_species(o.species);
  MicrowaveDressing d;
  if (o.rabi_hz != 0.0 || o.detuning_hz != 0.0 || o.null_dressing) {
    d.enabled = true;
    d.rabi_frequency = kTwoPi * o.rabi_hz;
    d.detuning = kTwoPi * o.detuning_hz;
  }
  std::vector<double> grid = o.b_grid;
  if (grid.empty()) {
    require(o.points >= 1 && o.b_max_t >= o.b_min_t, ErrorKind::kValidation,
            "physics: invalid grid");
    for (std::size_t i = 0; i < o.points; ++i) {
      grid.push_back(o.points == 1 ? o.b_min_t
                                   : o.b_min_t + (o.b_max_t - o.b_min_t) *
                                                     static_cast<double>(i) /
                                                     static_cast<double>(o.points - 1));
    }
  }
  if (o.null_dressing) {
    d = null_quadratic(sp, grid.back(), d, NullParameter::kRabi);
    note("null Rabi frequency: " + std::to_string(d.rabi_frequency / kTwoPi) + " Hz");
  }
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    require(static_cast<bool>(file), ErrorKind::kIo, "cannot write " + o.out);
    os = &file;
  }
  *os << "b_t,omega_over_2pi_hz,q_over_2pi_hz,gamma_over_2pi_hz_per_t\n" << std::setprecision(12);
  for (double b : grid) {
    // gamma(B) is omega/B; at B = 0 report its limit.
    const double g = b > 0.0 ? running_gamma(sp, b, d)
                             : larmor_frequency(sp, 1e-12, d) / 1e-12;
    *os << b << ',' << larmor_frequency(sp, b, d) / kTwoPi << ','
        << quadratic_shift(sp, b, d) / kTwoPi << ',' << g / kTwoPi << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fidmag: cold-atom FID magnetometer digital twin"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_flag("-v,--verbose", verbosity, "Progress notes on stderr");

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Scenario file (YAML)");
    c->add_option("--seed", o.seed, "Override the scenario's base seed");
  };

  auto* sim = app.add_subcommand("simulate", "Synthesize one record (FIDR + JSON sidecar)");
  add_config(sim);
  sim->add_option("--out", o.out, "Output .fidr path")->required();
  sim->add_option("--trial", o.trial, "Trial index (selects the random streams)");
  sim->add_option("--csv", o.csv, "Also write the record as CSV");

  auto add_band = [&](CLI::App* c) {
    c->add_option("--band", o.band_hz, "Bandpass width, Hz")->check(CLI::PositiveNumber);
    c->add_option("--center", o.center_hz, "Bandpass centre, Hz (default: locate carrier)");
    c->add_option("--order", o.order, "Butterworth prototype order")->check(CLI::Range(1, 12));
  };

  auto* rec = app.add_subcommand("reconstruct", "Bandpass + Hilbert phase of a record");
  add_config(rec);
  add_band(rec);
  rec->add_option("--in", o.in, "Input .fidr")->required();
  rec->add_option("--out", o.out, "Output phase CSV")->required();

  auto* est = app.add_subcommand("estimate", "Weighted dc fit of a record");
  add_config(est);
  add_band(est);
  est->add_option("--in", o.in, "Input .fidr")->required();
  est->add_option("--out", o.out, "Output DcEstimate JSON")->required();
  est->add_option("--psd-csv", o.csv, "Residual phase PSD CSV");
  est->add_flag("--with-residuals", o.residuals, "Include residuals in the JSON");

  auto* ffc = app.add_subcommand("calibrate-ffc", "Calibration + compensated shot");
  add_config(ffc);
  ffc->add_option("--out", o.out, "Output directory")->required();
  ffc->add_option("--trial", o.trial, "Trial index");

  auto* mc = app.add_subcommand("mc", "Monte Carlo ensemble of the scenario's experiment");
  add_config(mc);
  mc->add_option("--out", o.out, "Output directory");
  mc->add_option("--trials", o.trials, "Override the trial count");
  mc->add_option("--threads", o.threads, "Worker threads (default: hardware)");
  mc->add_option("--replay-trial", o.replay, "Recompute one report row and print it");

  auto* sp = app.add_subcommand("spectra", "Record, residual and field spectra as CSV");
  add_config(sp);
  add_band(sp);
  sp->add_option("--in", o.in, "Input .fidr")->required();
  sp->add_option("--out", o.out, "Output directory")->required();
  sp->add_option("--resolution", o.resolution_hz, "Spectral resolution, Hz");
  sp->add_option("--snr-window", o.snr_window_s, "SNR(t) window, s");

  auto* ph = app.add_subcommand("physics", "Tabulate omega, q and gamma(B)");
  ph->add_option("--species", o.species, "Species constants file");
  ph->add_option("--b-min", o.b_min_t, "Grid start, T");
  ph->add_option("--b-max", o.b_max_t, "Grid end, T");
  ph->add_option("--points", o.points, "Grid points");
  ph->add_option("--b", o.b_grid, "Explicit field values, T");
  ph->add_option("--rabi-hz", o.rabi_hz, "Microwave Rabi frequency, Hz");
  ph->add_option("--detuning-hz", o.detuning_hz, "Microwave detuning, Hz (signed)");
  ph->add_flag("--null", o.null_dressing, "Solve the Rabi frequency nulling q at the last B");
  ph->add_option("--out", o.out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("validation", e.what(), 2);
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*rec) return cmd_reconstruct(o);
    if (*est) return cmd_estimate(o);
    if (*ffc) return cmd_calibrate_ffc(o);
    if (*mc) return cmd_mc(o);
    if (*sp) return cmd_spectra(o);
    if (*ph) return cmd_physics(o);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(to_string(e.kind()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error("internal", e.what(), 3);
    return 3;
  }
  return 0;
}
