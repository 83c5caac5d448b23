#include "fidmag/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>

#include "fidmag/errors.hpp"
#include "fidmag/filter.hpp"
#include "fidmag/parallel.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/rng.hpp"

namespace fidmag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t base_seed(const Scenario& s) { return s.seed.value_or(0); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return kNaN;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

// Wilson-Hilferty approximation of the chi-square quantile.
double chi2_quantile(double k, double z) {
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3);
}

// Slope of omega(B): the small-signal field-to-frequency gain.
double field_gain(const AtomicSpecies& sp, double b, const MicrowaveDressing& d) {
  const double h = std::max(1e-9, 1e-4 * b);
  const double lo = std::max(0.0, b - h);
  return (larmor_frequency(sp, b + h, d) - larmor_frequency(sp, lo, d)) / (b + h - lo);
}

nlohmann::json to_json(const Aggregate& a) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
  return {{"count", a.count},   {"mean", num(a.mean)}, {"variance", num(a.variance)},
          {"q05", num(a.q05)},  {"q50", num(a.q50)},   {"q95", num(a.q95)}};
}

std::string fmt_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

ReconstructionOptions band_options(const Scenario& s, double band_hz) {
  ReconstructionOptions o = s.reconstruction;
  o.band_hz = band_hz;
  o.edge_guard = 0;
  return o;
}

}  // namespace

Aggregate aggregate(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }),
          v.end());
  Aggregate a;
  a.count = v.size();
  if (v.empty()) {
    a.mean = a.variance = a.q05 = a.q50 = a.q95 = kNaN;
    return a;
  }
  long double sum = 0.0L;
  for (double x : v) sum += x;
  const long double mean = sum / static_cast<long double>(v.size());
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  a.mean = static_cast<double>(mean);
  a.variance = v.size() > 1 ? static_cast<double>(ss / static_cast<long double>(v.size() - 1))
                            : 0.0;
  std::sort(v.begin(), v.end());
  a.q05 = quantile_sorted(v, 0.05);
  a.q50 = quantile_sorted(v, 0.50);
  a.q95 = quantile_sorted(v, 0.95);
  return a;
}

std::size_t EnsembleReport::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  require(it != columns.end(), ErrorKind::kDomain, "report has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> EnsembleReport::values(const std::string& name, bool ok_only) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (ok_only && !r.ok) continue;
    out.push_back(c < r.values.size() ? r.values[c] : kNaN);
  }
  return out;
}

Aggregate EnsembleReport::aggregate(const std::string& name) const {
  return fidmag::aggregate(values(name));
}

std::size_t EnsembleReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const TrialRow& r) { return !r.ok; }));
}

nlohmann::json EnsembleReport::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["scenario"] = scenario;
  j["base_seed"] = base_seed;
  j["trials"] = rows.size();
  j["failures"] = failures();
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& c : columns) agg[c] = fidmag::to_json(aggregate(c));
  agg["runtime_s"] = [&] {
    std::vector<double> rt;
    for (const auto& r : rows) rt.push_back(r.runtime_s);
    return fidmag::to_json(fidmag::aggregate(rt));
  }();
  j["aggregates"] = agg;
  j["summary"] = summary;
  return j;
}

void EnsembleReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << "trial,base_seed,seed,ok";
  for (const auto& c : columns) out << ',' << c;
  out << ",runtime_s,error\n";
  for (const auto& r : rows) {
    out << r.trial << ',' << base_seed << ',' << r.seed << ',' << (r.ok ? 1 : 0);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out << ',' << fmt_double(i < r.values.size() ? r.values[i] : kNaN);
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << ',' << fmt_double(r.runtime_s) << ',' << err << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
}

std::uint64_t trial_key(std::uint64_t trial, std::uint64_t shot) { return trial * 4 + shot; }

ShotRealization simulate_shot(const Scenario& s, std::uint64_t key,
                              const FieldTrace* added_field) {
  ShotRealization out;
  out.dressing = resolve_dressing(s);
  const std::uint64_t base = base_seed(s);
  FieldModel model = s.field;
  model.seed = derive_seed(base, key, Stream::kFieldNoise);
  out.field = sample_field_trace(model, s.record.fs_hz, s.record.fid_duration_s);
  if (added_field) out.field = add_traces(out.field, *added_field);
  out.truth = integrate_larmor_phase(out.field, s.species, out.dressing);

  SynthesisOptions opt;
  opt.sigma_v = sigma_for_snr(s.decay.a0_v, db_to_ratio(s.record.initial_snr_db));
  opt.detector_fraction = s.record.detector_fraction;
  opt.bit_depth = s.record.bit_depth;
  opt.full_scale_v = s.record.full_scale_v;
  opt.detector_only_s = s.record.detector_only_s;
  opt.probe_on_s = s.record.probe_on_s;
  opt.noise_seed = derive_seed(base, key, Stream::kPolarimeterNoise);
  if (s.record.random_phi0) {
    auto eng = make_engine(derive_seed(base, key, Stream::kReferencePhase));
    opt.phi0_rad = std::uniform_real_distribution<double>(0.0, kTwoPi)(eng);
  } else {
    opt.phi0_rad = s.record.phi0_rad;
  }
  out.record = synthesize_polarimeter_record(out.truth, s.decay, opt);
  return out;
}

SingleShotResult analyse_single_shot(const Scenario& s, const PolarimeterRecord& record,
                                     const MicrowaveDressing& dressing,
                                     const PhaseSeries* truth, const SingleShotOptions& opt) {
  SingleShotResult res;
  res.b0_t = s.field.b0_t;
  res.clipped_samples = record.meta.clipped_samples;
  {
    const Reconstruction rec = reconstruct_phase(record, s.reconstruction);
    if (rec.discontinuous()) {
      fail(ErrorKind::kUnwrap,
           "phase discontinuity at " + std::to_string(rec.discontinuities.size()) +
               " sample(s), first at t = " +
               std::to_string(rec.phase.time(rec.discontinuities.front())) +
               " s; the band is too wide for the SNR or too narrow for the field spectrum");
    }
    res.center_hz = rec.center_hz;
    res.enbw_hz = rec.enbw_hz;
    res.edge_guard = rec.edge_guard;
    res.unwrap_corrections = rec.unwrap_corrections;

    DcFitOptions fo;
    fo.noise_model = s.estimator.noise_model;
    fo.use_weights = s.estimator.use_weights;
    fo.noise_bandwidth_hz = rec.enbw_hz;
    res.estimate = fit_dc_phase(rec.phase, s.species, dressing, fo);

    if (truth) {
      // Same samples and weights as the measurement, without the noise.
      PhaseSeries t;
      t.fs_hz = rec.phase.fs_hz;
      t.t0_s = rec.phase.t0_s;
      t.weights = rec.phase.weights;
      const auto first = static_cast<std::size_t>(std::llround(rec.phase.t0_s * t.fs_hz));
      require(first + rec.phase.phase.size() <= truth->phase.size(), ErrorKind::kValidation,
              "truth phase shorter than the reconstruction");
      t.phase.assign(truth->phase.begin() + static_cast<std::ptrdiff_t>(first),
                     truth->phase.begin() +
                         static_cast<std::ptrdiff_t>(first + rec.phase.phase.size()));
      DcFitOptions to;
      to.use_weights = s.estimator.use_weights;
      res.b_true_t = fit_dc_phase(t, s.species, dressing, to).B_est;
    } else {
      res.b_true_t = kNaN;
    }
    if (opt.residual_psd) {
      res.residual_psd = power_spectrum(res.estimate.residuals, rec.phase.fs_hz,
                                        s.single_shot.knee_psd_resolution_hz);
    }
  }
  if (opt.knee) {
    const auto& k = s.single_shot;
    const Reconstruction wide = reconstruct_phase(record, band_options(s, k.knee_band_hz));
    const PhaseSeries early = slice(wide.phase, wide.phase.t0_s, k.knee_window_s);
    DcFitOptions fo;
    fo.use_weights = s.estimator.use_weights;
    const DcEstimate e = fit_dc_phase(early, s.species, dressing, fo);
    res.knee_psd = power_spectrum(e.residuals, early.fs_hz, k.knee_psd_resolution_hz);
    res.knee = fit_phase_noise_model(res.knee_psd, k.knee_f_lo_hz, k.knee_f_hi_hz);
    res.knee_computed = true;
  }
  if (opt.snr_trace) res.snr = full_bandwidth_snr(record, opt.snr_window_s);
  return res;
}

SingleShotResult run_single_shot_pipeline(const Scenario& s, std::uint64_t trial,
                                          const SingleShotOptions& opt) {
  ShotRealization shot = simulate_shot(s, trial_key(trial));
  shot.field.samples.clear();
  shot.field.samples.shrink_to_fit();
  return analyse_single_shot(s, shot.record, shot.dressing, &shot.truth, opt);
}

// ---------------------------------------------------------------- fringe hop

double scenario_critical_time(const Scenario& s) {
  require(s.field.white_asd_t_rthz > 0.0, ErrorKind::kValidation,
          "fringe hop: scenario needs white field noise");
  return critical_time(2.0, s.field.white_asd_t_rthz * s.field.white_asd_t_rthz, s.species);
}

std::vector<double> default_tau_grid(const Scenario& s) {
  const double tc = scenario_critical_time(s);
  return {0.01 * tc, 0.25 * tc, 0.5 * tc, tc, 2.0 * tc};
}

namespace {

// At least 200 integration steps per tau, so the trapezoid's half-sample
// variance deficit stays below 0.25%.
std::size_t fringe_steps(double tau_s, double fs_hz) {
  return static_cast<std::size_t>(std::max(200.0, std::round(tau_s * fs_hz)));
}

}  // namespace

double fringe_hop_phase(const Scenario& s, double tau_s, double fs_hz, std::uint64_t key) {
  const MicrowaveDressing d = resolve_dressing(s);
  const std::size_t n = fringe_steps(tau_s, fs_hz);
  const double fs = static_cast<double>(n) / tau_s;
  FieldModel model = s.field;
  model.seed = derive_seed(base_seed(s), key, Stream::kFieldNoise);
  const FieldTrace trace = sample_field_trace(model, fs, static_cast<double>(n + 1) / fs);
  require(trace.samples.size() == n + 1, ErrorKind::kNumeric, "fringe hop: sample count");
  const PhaseSeries p = integrate_larmor_phase(trace, s.species, d);
  return p.phase.back() - larmor_frequency(s.species, s.field.b0_t, d) * tau_s;
}

std::vector<FringeHopPoint> run_fringe_hop_mc(const Scenario& s,
                                              const std::vector<double>& tau_grid_s,
                                              EnsembleReport* report) {
  require(s.field.harmonics.empty(), ErrorKind::kValidation,
          "fringe hop: scenario must have a white-noise-only field model");
  const double s_bb = s.field.white_asd_t_rthz * s.field.white_asd_t_rthz;
  require(s_bb > 0.0, ErrorKind::kValidation, "fringe hop: scenario needs white field noise");
  const MicrowaveDressing d = resolve_dressing(s);
  const double gain = field_gain(s.species, s.field.b0_t, d);
  const std::size_t trials = s.trials;
  std::vector<FringeHopPoint> points;
  if (report) {
    report->columns = {"tau_s", "phi_rad", "hop"};
    report->rows.resize(tau_grid_s.size() * trials);
  }
  for (std::size_t ti = 0; ti < tau_grid_s.size(); ++ti) {
    const double tau = tau_grid_s[ti];
    std::vector<double> phi(trials);
    parallel_for(trials, [&](std::size_t t) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::uint64_t key = ti * trials + t;
      phi[t] = fringe_hop_phase(s, tau, s.fringe_hop.fs_hz, key);
      if (report) {
        auto& row = report->rows[key];
        row.trial = key;
        row.seed = derive_seed(base_seed(s), key, Stream::kFieldNoise);
        row.values = {tau, phi[t], ramsey_project(phi[t]).hop ? 1.0 : 0.0};
        row.runtime_s = seconds_since(t0);
      }
    });
    FringeHopPoint pt;
    pt.tau_s = tau;
    pt.fs_hz = static_cast<double>(fringe_steps(tau, s.fringe_hop.fs_hz)) / tau;
    pt.trials = trials;
    long double sum = 0.0L, ss = 0.0L;
    for (double x : phi) {
      sum += x;
      if (ramsey_project(x).hop) ++pt.hops;
    }
    const long double mean = sum / static_cast<long double>(trials);
    for (double x : phi) ss += (x - mean) * (x - mean);
    pt.sigma_phi = trials > 1 ? std::sqrt(static_cast<double>(ss / (trials - 1))) : 0.0;
    pt.sigma_phi_model = gain * std::sqrt(s_bb * tau / 2.0);
    pt.hop_fraction_model =
        std::erfc(std::numbers::pi / (2.0 * pt.sigma_phi_model) / std::numbers::sqrt2);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(pt.hops) / n;
    const double z = 1.959963984540054;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    pt.hop_fraction = p;
    pt.ci_low = std::max(0.0, centre - half);
    pt.ci_high = std::min(1.0, centre + half);
    points.push_back(pt);
  }
  return points;
}

// ---------------------------------------------------------------- CRLB sweep

namespace {

struct CrlbSetup {
  Scenario shot;  // record length set so the fit sees exactly fit_samples
  double carrier_hz = 0.0;
  double omega_true = 0.0;
  std::size_t guard = 0;
};

CrlbSetup crlb_setup(const Scenario& s) {
  require(s.field.harmonics.empty() && s.field.white_asd_t_rthz == 0.0, ErrorKind::kValidation,
          "crlb sweep: scenario must have a static field (no noise, no harmonics)");
  CrlbSetup c;
  c.shot = s;
  const MicrowaveDressing d = resolve_dressing(s);
  c.omega_true = larmor_frequency(s.species, s.field.b0_t, d);
  c.carrier_hz = c.omega_true / kTwoPi;
  const ButterworthBandpass filter(
      band_around(c.carrier_hz, s.crlb.band_hz, s.reconstruction.order), s.record.fs_hz);
  c.guard = filter.edge_guard();
  c.shot.record.fid_duration_s =
      static_cast<double>(s.crlb.fit_samples + 2 * c.guard) / s.record.fs_hz;
  c.shot.reconstruction.band_hz = s.crlb.band_hz;
  c.shot.reconstruction.center_hz = c.carrier_hz;
  c.shot.reconstruction.edge_guard = c.guard;
  return c;
}

double crlb_trial_impl(const CrlbSetup& c, double snr_db, std::uint64_t key,
                       bool* discontinuous) {
  Scenario sc = c.shot;
  sc.record.initial_snr_db = snr_db;
  const ShotRealization shot = simulate_shot(sc, key);
  const Reconstruction rec = reconstruct_phase(shot.record, sc.reconstruction);
  require(rec.phase.phase.size() == sc.crlb.fit_samples, ErrorKind::kNumeric,
          "crlb sweep: unexpected fit length");
  if (discontinuous) *discontinuous = rec.discontinuous();
  DcFitOptions fo;
  fo.noise_model = PhaseNoiseModel::kIndependentSamples;
  fo.use_weights = false;
  const DcEstimate e = fit_dc_phase(rec.phase, sc.species, shot.dressing, fo);
  return e.omega_est - c.omega_true;
}

}  // namespace

double crlb_trial(const Scenario& s, double snr_db, std::uint64_t key, bool* discontinuous) {
  return crlb_trial_impl(crlb_setup(s), snr_db, key, discontinuous);
}

CrlbSweep run_crlb_sweep(const Scenario& s, const std::vector<double>& snr_grid_db,
                         EnsembleReport* report) {
  const CrlbSetup c = crlb_setup(s);
  CrlbSweep out;
  out.carrier_hz = c.carrier_hz;
  out.threshold_db = threshold_snr_db(s.crlb.band_hz, s.record.fs_hz);
  const std::size_t trials = s.trials;
  if (report) {
    report->columns = {"snr_db", "omega_error_rad_s", "discontinuous"};
    report->rows.resize(snr_grid_db.size() * trials);
  }
  for (std::size_t pi = 0; pi < snr_grid_db.size(); ++pi) {
    const double snr_db = snr_grid_db[pi];
    std::vector<double> err(trials);
    std::vector<char> disc(trials, 0);
    parallel_for(trials, [&](std::size_t t) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::uint64_t key = pi * trials + t;
      bool dflag = false;
      err[t] = crlb_trial_impl(c, snr_db, key, &dflag);
      disc[t] = dflag ? 1 : 0;
      if (report) {
        auto& row = report->rows[key];
        row.trial = key;
        row.seed = derive_seed(base_seed(s), key, Stream::kFieldNoise);
        row.values = {snr_db, err[t], dflag ? 1.0 : 0.0};
        row.runtime_s = seconds_since(t0);
      }
    });
    CrlbPoint p;
    p.snr_db = snr_db;
    p.trials = trials;
    p.n_fit = s.crlb.fit_samples;
    const Aggregate a = aggregate(err);
    p.mean_error = a.mean;
    p.empirical_variance = a.variance;
    p.crlb_variance = crlb_frequency_variance(db_to_ratio(snr_db), p.n_fit, s.record.fs_hz);
    p.ratio = p.empirical_variance / p.crlb_variance;
    const double k = static_cast<double>(trials - 1);
    p.ratio_ci_low = p.ratio * k / chi2_quantile(k, 1.959963984540054);
    p.ratio_ci_high = p.ratio * k / chi2_quantile(k, -1.959963984540054);
    p.discontinuous = static_cast<std::size_t>(std::count(disc.begin(), disc.end(), 1));
    out.points.push_back(p);
  }
  // Empirical threshold: the highest SNR where the ratio, scanned downward,
  // first reaches 2 (log-linear interpolation between grid points).
  std::vector<CrlbPoint> sorted = out.points;
  std::sort(sorted.begin(), sorted.end(),
            [](const CrlbPoint& a, const CrlbPoint& b) { return a.snr_db > b.snr_db; });
  out.empirical_threshold_db = kNaN;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto& hi = sorted[i - 1];
    const auto& lo = sorted[i];
    if (hi.ratio < 2.0 && lo.ratio >= 2.0) {
      const double a = std::log(hi.ratio), b = std::log(lo.ratio);
      const double f = (std::log(2.0) - a) / (b - a);
      out.empirical_threshold_db = hi.snr_db + f * (lo.snr_db - hi.snr_db);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------- feed-forward

namespace {

double noise_amplitude(const PhaseSeries& phase, double gamma, const FfcConfig& c,
                       SpectrumEstimate* psd) {
  const auto field = field_from_phase(phase.phase, phase.fs_hz, gamma);
  *psd = power_spectrum(field, phase.fs_hz, c.psd_resolution_hz);
  return rms_noise_amplitude(*psd, c.noise_f_max_hz);
}

Reconstruction checked_reconstruction(const PolarimeterRecord& record,
                                      const ReconstructionOptions& opt, const char* what) {
  Reconstruction rec = reconstruct_phase(record, opt);
  if (rec.discontinuous()) {
    fail(ErrorKind::kUnwrap, std::string(what) + ": phase discontinuity in " +
                                 std::to_string(opt.band_hz) + " Hz band");
  }
  return rec;
}

}  // namespace

FfcResult run_ffc_cycle(const Scenario& s, std::uint64_t trial) {
  require(!s.field.harmonics.empty(), ErrorKind::kValidation,
          "ffc: scenario must include line harmonics");
  FfcResult res;
  const double line = s.field.line_frequency_hz + s.field.line_drift_hz;  // trigger-measured

  // Shot 1: calibration with the wide band.
  {
    Scenario cal = s;
    cal.record.fid_duration_s = s.ffc.calibration_duration_s;
    const ShotRealization shot = simulate_shot(cal, trial_key(trial, 0));
    const Reconstruction rec = checked_reconstruction(
        shot.record, band_options(s, s.ffc.calibration_band_hz), "ffc calibration");
    res.calibration = fit_harmonics(rec.phase, line, s.ffc.n_harmonics, s.species, shot.dressing);
    res.before_t = noise_amplitude(rec.phase, res.calibration.gamma, s.ffc, &res.before_psd);
  }

  // Shot 2: same line-locked interference plus the compensation field.
  CompensationField comp = s.compensation;
  comp.harmonics = res.calibration.as_harmonics();
  comp.line_frequency_hz = s.field.line_frequency_hz;
  comp.line_drift_hz = s.field.line_drift_hz;
  const FieldTrace wave = compensation_waveform(comp, s.record.fs_hz, s.record.fid_duration_s);
  res.compensation_clipped = wave.clipped_samples;
  const ShotRealization shot = simulate_shot(s, trial_key(trial, 1), &wave);
  {
    const Reconstruction rec = checked_reconstruction(
        shot.record, band_options(s, s.ffc.compensated_band_hz), "ffc compensated shot");
    res.after_t = noise_amplitude(rec.phase, res.calibration.gamma, s.ffc, &res.after_psd);
  }
  // Residual harmonics are measured in the wide band so the narrow filter's
  // edge roll-off does not masquerade as suppression. Only the first
  // calibration-length stretch is used: later the SNR is below the wide
  // band's threshold.
  {
    PolarimeterRecord head = shot.record;
    const std::size_t keep = std::min(
        head.volts.size(),
        head.segments.fid + static_cast<std::size_t>(
                                std::llround(s.ffc.calibration_duration_s * head.fs_hz)));
    head.volts.resize(keep);
    if (!head.codes.empty()) head.codes.resize(keep);
    const Reconstruction rec = checked_reconstruction(
        head, band_options(s, s.ffc.calibration_band_hz), "ffc residual fit");
    res.residual = fit_harmonics(rec.phase, line, s.ffc.n_harmonics, s.species, shot.dressing);
  }
  res.suppression_db = 20.0 * std::log10(res.before_t / res.after_t);
  for (std::size_t k = 0; k < res.calibration.harmonics.size(); ++k) {
    res.harmonic_suppression_db.push_back(
        20.0 * std::log10(res.calibration.harmonics[k].rms_t / res.residual.harmonics[k].rms_t));
  }
  return res;
}

HarmonicFit run_harmonic_recovery(const Scenario& s, std::uint64_t trial) {
  const ShotRealization shot = simulate_shot(s, trial_key(trial));
  const Reconstruction rec = checked_reconstruction(
      shot.record, band_options(s, s.harmonic_recovery.band_hz), "harmonic recovery");
  return fit_harmonics(rec.phase, s.field.line_frequency_hz + s.field.line_drift_hz,
                       s.harmonic_recovery.n_harmonics, s.species, shot.dressing);
}

// ---------------------------------------------------------------- ensembles

namespace {

std::vector<std::string> trial_columns(const Scenario& s) {
  switch (s.kind) {
    case ExperimentKind::kSingleShot:
      return {"b_est_t",          "b_true_t", "b0_t",          "delta_b_dc_t",
              "delta_b_detector_t", "error_t", "error_over_sigma", "delta_phi_rad",
              "weighted_mean_snr_db", "center_hz", "enbw_hz", "knee_hz"};
    case ExperimentKind::kFfc: {
      std::vector<std::string> c{"before_t", "after_t", "suppression_db",
                                 "compensation_clipped"};
      for (int k = 0; k < s.ffc.n_harmonics; ++k) {
        c.push_back("h" + std::to_string(k + 1) + "_suppression_db");
      }
      return c;
    }
    case ExperimentKind::kHarmonicRecovery: {
      std::vector<std::string> c;
      for (int k = 0; k < s.harmonic_recovery.n_harmonics; ++k) {
        const std::string p = "h" + std::to_string(k + 1) + "_";
        for (const char* n : {"frequency_hz", "rms_t", "rms_sigma_t", "injected_t", "pull"}) {
          c.push_back(p + n);
        }
      }
      return c;
    }
    default:
      return {};
  }
}

double injected_rms(const Scenario& s, double frequency_hz) {
  for (const auto& h : s.field.harmonics) {
    if (harmonic_order(h.frequency_hz, s.field.line_frequency_hz) ==
        harmonic_order(frequency_hz, s.field.line_frequency_hz + s.field.line_drift_hz)) {
      return h.rms_t;
    }
  }
  return 0.0;
}

std::vector<double> trial_values(const Scenario& s, std::uint64_t trial) {
  switch (s.kind) {
    case ExperimentKind::kSingleShot: {
      SingleShotOptions opt;
      opt.knee = trial < s.single_shot.knee_trials;
      const auto r = run_single_shot_pipeline(s, trial, opt);
      const auto& e = r.estimate;
      const double err = e.B_est - r.b_true_t;
      return {e.B_est,
              r.b_true_t,
              r.b0_t,
              e.delta_B_dc,
              e.delta_B_detector,
              err,
              err / e.delta_B_dc,
              e.delta_phi,
              ratio_to_db(e.weighted_mean_snr),
              r.center_hz,
              r.enbw_hz,
              r.knee_computed ? r.knee.corner_hz : kNaN};
    }
    case ExperimentKind::kFfc: {
      const auto r = run_ffc_cycle(s, trial);
      std::vector<double> v{r.before_t, r.after_t, r.suppression_db,
                            static_cast<double>(r.compensation_clipped)};
      v.insert(v.end(), r.harmonic_suppression_db.begin(), r.harmonic_suppression_db.end());
      return v;
    }
    case ExperimentKind::kHarmonicRecovery: {
      const auto fit = run_harmonic_recovery(s, trial);
      std::vector<double> v;
      for (const auto& h : fit.harmonics) {
        const double inj = injected_rms(s, h.frequency_hz);
        v.insert(v.end(), {h.frequency_hz, h.rms_t, h.rms_uncertainty_t, inj,
                           (h.rms_t - inj) / h.rms_uncertainty_t});
      }
      return v;
    }
    default:
      fail(ErrorKind::kValidation, "trial_values: experiment has no per-trial runner");
  }
}

void summarise_single_shot(EnsembleReport& r) {
  std::size_t covered = 0;
  for (const auto& row : r.rows) {
    if (row.ok && std::abs(row.values[r.column("error_over_sigma")]) < 3.0) ++covered;
  }
  r.summary["within_3_sigma"] = covered;
  r.summary["trials"] = r.rows.size();
  r.summary["delta_b_dc_median_t"] = r.aggregate("delta_b_dc_t").q50;
  const auto knee = r.aggregate("knee_hz");
  r.summary["knee_median_hz"] = knee.count ? nlohmann::json(knee.q50) : nlohmann::json();
}

void summarise_ffc(EnsembleReport& r, const Scenario& s) {
  r.summary["suppression_mean_db"] = r.aggregate("suppression_db").mean;
  r.summary["before_mean_t"] = r.aggregate("before_t").mean;
  r.summary["after_mean_t"] = r.aggregate("after_t").mean;
  nlohmann::json h = nlohmann::json::array();
  for (int k = 0; k < s.ffc.n_harmonics; ++k) {
    h.push_back(r.aggregate("h" + std::to_string(k + 1) + "_suppression_db").mean);
  }
  r.summary["harmonic_suppression_mean_db"] = h;
}

void summarise_harmonics(EnsembleReport& r, const Scenario& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (int k = 0; k < s.harmonic_recovery.n_harmonics; ++k) {
    const std::string p = "h" + std::to_string(k + 1) + "_";
    const auto rms = r.aggregate(p + "rms_t");
    const auto sig = r.aggregate(p + "rms_sigma_t");
    const auto inj = r.aggregate(p + "injected_t");
    const auto pulls = r.values(p + "pull");
    const auto within = std::count_if(pulls.begin(), pulls.end(),
                                      [](double x) { return std::abs(x) < 3.0; });
    const double sem = std::sqrt(sig.mean * sig.mean / static_cast<double>(rms.count));
    arr.push_back({{"frequency_hz", r.aggregate(p + "frequency_hz").mean},
                   {"injected_t", inj.mean},
                   {"mean_rms_t", rms.mean},
                   {"scatter_t", std::sqrt(rms.variance)},
                   {"mean_uncertainty_t", sig.mean},
                   {"mean_error_over_sem", (rms.mean - inj.mean) / sem},
                   {"trials_within_3_sigma", within}});
  }
  r.summary["harmonics"] = arr;
}

}  // namespace

TrialRow replay_trial(const Scenario& s, std::uint64_t trial) {
  TrialRow row;
  row.trial = trial;
  const auto t0 = std::chrono::steady_clock::now();
  switch (s.kind) {
    case ExperimentKind::kFringeHop: {
      auto grid = s.fringe_hop.tau_grid_s.empty() ? default_tau_grid(s) : s.fringe_hop.tau_grid_s;
      const double tau = grid.at(trial / s.trials);
      const double phi = fringe_hop_phase(s, tau, s.fringe_hop.fs_hz, trial);
      row.values = {tau, phi, ramsey_project(phi).hop ? 1.0 : 0.0};
      row.seed = derive_seed(base_seed(s), trial, Stream::kFieldNoise);
      break;
    }
    case ExperimentKind::kCrlbSweep: {
      const double snr_db = s.crlb.snr_grid_db.at(trial / s.trials);
      bool d = false;
      const double err = crlb_trial(s, snr_db, trial, &d);
      row.values = {snr_db, err, d ? 1.0 : 0.0};
      row.seed = derive_seed(base_seed(s), trial, Stream::kFieldNoise);
      break;
    }
    default:
      row.seed = derive_seed(base_seed(s), trial_key(trial), Stream::kFieldNoise);
      try {
        row.values = trial_values(s, trial);
      } catch (const Error& e) {
        row.ok = false;
        row.error = e.what();
        row.values.assign(trial_columns(s).size(), kNaN);
      }
  }
  row.runtime_s = seconds_since(t0);
  return row;
}

EnsembleReport run_ensemble(const Scenario& s, unsigned threads) {
  validate(s);
  EnsembleReport r;
  r.experiment = to_string(s.kind);
  r.scenario = s.name;
  r.base_seed = base_seed(s);
  switch (s.kind) {
    case ExperimentKind::kFringeHop: {
      const auto grid =
          s.fringe_hop.tau_grid_s.empty() ? default_tau_grid(s) : s.fringe_hop.tau_grid_s;
      const auto pts = run_fringe_hop_mc(s, grid, &r);
      r.summary["critical_time_s"] = scenario_critical_time(s);
      auto arr = nlohmann::json::array();
      for (const auto& p : pts) {
        arr.push_back({{"tau_s", p.tau_s},
                       {"fs_hz", p.fs_hz},
                       {"trials", p.trials},
                       {"hops", p.hops},
                       {"hop_fraction", p.hop_fraction},
                       {"ci_low", p.ci_low},
                       {"ci_high", p.ci_high},
                       {"hop_fraction_model", p.hop_fraction_model},
                       {"sigma_phi_rad", p.sigma_phi},
                       {"sigma_phi_model_rad", p.sigma_phi_model}});
      }
      r.summary["points"] = arr;
      return r;
    }
    case ExperimentKind::kCrlbSweep: {
      const auto sweep = run_crlb_sweep(s, s.crlb.snr_grid_db, &r);
      r.summary["threshold_db"] = sweep.threshold_db;
      r.summary["empirical_threshold_db"] =
          std::isfinite(sweep.empirical_threshold_db) ? nlohmann::json(sweep.empirical_threshold_db)
                                                      : nlohmann::json();
      r.summary["carrier_hz"] = sweep.carrier_hz;
      auto arr = nlohmann::json::array();
      for (const auto& p : sweep.points) {
        arr.push_back({{"snr_db", p.snr_db},
                       {"trials", p.trials},
                       {"n_fit", p.n_fit},
                       {"empirical_variance", p.empirical_variance},
                       {"crlb_variance", p.crlb_variance},
                       {"ratio", p.ratio},
                       {"ratio_ci_low", p.ratio_ci_low},
                       {"ratio_ci_high", p.ratio_ci_high},
                       {"mean_error_rad_s", p.mean_error},
                       {"discontinuous", p.discontinuous}});
      }
      r.summary["points"] = arr;
      return r;
    }
    default:
      break;
  }
  r.columns = trial_columns(s);
  r.rows.resize(s.trials);
  parallel_for(s.trials, [&](std::size_t t) { r.rows[t] = replay_trial(s, t); }, threads);
  switch (s.kind) {
    case ExperimentKind::kSingleShot: summarise_single_shot(r); break;
    case ExperimentKind::kFfc: summarise_ffc(r, s); break;
    case ExperimentKind::kHarmonicRecovery: summarise_harmonics(r, s); break;
    default: break;
  }
  return r;
}

}  // namespace fidmag
