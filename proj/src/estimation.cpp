#include "fidmag/estimation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "fidmag/errors.hpp"

namespace fidmag {
namespace {

constexpr double kPi = std::numbers::pi;

double gamma_at(const AtomicSpecies& s, double b, const MicrowaveDressing& d) {
  return b > 0.0 ? running_gamma(s, b, d) : s.gamma0;
}

double wrap_pi(double x) {
  double y = std::remainder(x, 2.0 * kPi);
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

}  // namespace

SensitivityBudget sensitivity_budget(double snr, double s_bb, double tau_s, double fs_hz,
                                     double gamma) {
  require(snr > 0.0 && tau_s > 0.0 && fs_hz > 0.0 && s_bb >= 0.0, ErrorKind::kDomain,
          "sensitivity_budget: invalid arguments");
  SensitivityBudget b;
  b.delta_phi_shot_sq = 1.0 / snr;
  b.delta_phi_field_sq = gamma * gamma * s_bb * tau_s / (4.0 * kPi * kPi);
  b.s_shot = 2.0 / (fs_hz * snr);
  b.corner_frequency_hz = phase_noise_corner(s_bb, snr, fs_hz, gamma);
  return b;
}

PhaseNoiseFit fit_phase_noise_model(const SpectrumEstimate& s, double f_lo_hz,
                                    double f_hi_hz) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t k = 0; k < s.psd.size(); ++k) {
    const double f = s.frequency_hz[k];
    if (f >= f_lo_hz && f <= f_hi_hz && f > 0.0) {
      x.push_back(1.0 / (f * f));
      y.push_back(s.psd[k]);
    }
  }
  require(x.size() >= 3, ErrorKind::kDomain,
          "fit_phase_noise_model: fewer than 3 bins in the fit band");
  std::vector<double> model = y;
  PhaseNoiseFit out;
  for (int iter = 0; iter < 8; ++iter) {
    double sxx = 0, sx = 0, s1 = 0, sxy = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = 1.0 / std::max(model[i] * model[i], 1e-300);
      sxx += v * x[i] * x[i];
      sx += v * x[i];
      s1 += v;
      sxy += v * x[i] * y[i];
      sy += v * y[i];
    }
    const double det = sxx * s1 - sx * sx;
    double r = det != 0.0 ? (sxy * s1 - sx * sy) / det : 0.0;
    double w = det != 0.0 ? (sxx * sy - sx * sxy) / det : sy / s1;
    if (r < 0.0) {
      r = 0.0;
      w = sy / s1;
    } else if (w < 0.0) {
      w = 0.0;
      r = sxy / sxx;
    }
    out.field_coeff = r;
    out.white_level = w;
    for (std::size_t i = 0; i < x.size(); ++i) model[i] = r * x[i] + w;
  }
  out.corner_hz = out.white_level > 0.0 ? std::sqrt(out.field_coeff / out.white_level) : 0.0;
  return out;
}

DcEstimate fit_dc_phase(const PhaseSeries& phase, const AtomicSpecies& s,
                        const MicrowaveDressing& dressing, const DcFitOptions& opt) {
  validate(phase);
  const std::size_t n = phase.phase.size();
  require(n >= 100, ErrorKind::kDomain, "fit_dc_phase: need >= 100 samples");
  const bool weighted = opt.use_weights && !phase.weights.empty();
  auto w = [&](std::size_t i) { return weighted ? phase.weights[i] : 1.0; };

  const double ref = phase.phase[0];
  long double sw = 0, st = 0, sp = 0, su_t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = phase.time(i);
    sw += w(i);
    st += w(i) * t;
    sp += w(i) * (phase.phase[i] - ref);
    su_t += t;
  }
  require(sw > 0, ErrorKind::kDomain, "fit_dc_phase: weights sum to zero");
  const long double tbar = st / sw;
  const long double pbar = sp / sw;
  const long double tbar_u = su_t / static_cast<long double>(n);
  long double stt = 0, stp = 0, suu = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dt = phase.time(i) - tbar;
    stt += w(i) * dt * dt;
    stp += w(i) * dt * ((phase.phase[i] - ref) - pbar);
    const long double du = phase.time(i) - tbar_u;
    suu += du * du;
  }
  require(stt > 0, ErrorKind::kDomain, "fit_dc_phase: rank-deficient design (constant t)");

  DcEstimate e;
  e.n_samples = n;
  e.tau_s = static_cast<double>(n) / phase.fs_hz;
  e.omega_est = static_cast<double>(stp / stt);
  e.phi_est = static_cast<double>(ref + pbar - stp / stt * tbar);
  e.B_est = invert_field(s, e.omega_est, dressing, opt.invert_tol);
  e.gamma = gamma_at(s, e.B_est, dressing);
  e.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    e.residuals[i] = static_cast<double>(
        (phase.phase[i] - ref) - (pbar + static_cast<long double>(e.omega_est) *
                                             (phase.time(i) - tbar)));
  }
  const double sum_uu = static_cast<double>(suu);

  if (opt.noise_model == PhaseNoiseModel::kIndependentSamples) {
    // Weights rescaled to unit mean, residual scatter as the noise level.
    const double norm = static_cast<double>(n) / static_cast<double>(sw);
    long double rss = 0;
    for (std::size_t i = 0; i < n; ++i) rss += w(i) * norm * e.residuals[i] * e.residuals[i];
    const double sigma_r2 = static_cast<double>(rss) / static_cast<double>(n - 2);
    const double var_omega = sigma_r2 / (static_cast<double>(stt) * norm);
    e.sigma_omega = std::sqrt(var_omega);
    e.delta_phi = std::sqrt(sigma_r2);
    e.weighted_mean_snr = var_omega > 0.0 ? 1.0 / (var_omega * sum_uu) : 0.0;
    e.budget.delta_phi_shot_sq = sigma_r2;
    e.budget.s_shot = 2.0 * sigma_r2 / phase.fs_hz;
  } else {
    const double duration = e.tau_s;
    const double res = opt.psd_resolution_hz > 0.0 ? opt.psd_resolution_hz
                                                    : std::max(10.0, 4.0 / duration);
    const auto psd = power_spectrum(e.residuals, phase.fs_hz, res);
    const double f_lo = opt.psd_f_lo_hz > 0.0 ? opt.psd_f_lo_hz : 2.0 * psd.resolution_hz;
    // Short records have coarse bins; keep at least five in the fit band.
    const double f_hi = opt.psd_f_hi_hz > 0.0 ? opt.psd_f_hi_hz
                        : opt.noise_bandwidth_hz > 0.0
                            ? std::max(0.2 * opt.noise_bandwidth_hz, f_lo + 4.0 * psd.resolution_hz)
                            : phase.fs_hz / 20.0;
    const auto nf = fit_phase_noise_model(psd, f_lo, f_hi);
    double var_det = 0.0;
    if (weighted) {
      var_det = 1.0 / static_cast<double>(stt);
    } else {
      require(nf.white_level > 0.0, ErrorKind::kNumeric,
              "fit_dc_phase: residual spectrum has no white level");
      const double snr = 2.0 / (phase.fs_hz * nf.white_level);
      var_det = 1.0 / (snr * sum_uu);
    }
    e.weighted_mean_snr = 1.0 / (var_det * sum_uu);
    e.budget.delta_phi_shot_sq = 1.0 / e.weighted_mean_snr;
    e.budget.delta_phi_field_sq = nf.field_coeff * duration;
    e.budget.corner_frequency_hz = nf.corner_hz;
    e.budget.s_shot = nf.white_level;
    e.delta_phi = std::sqrt(e.budget.total_sq());
    e.sigma_omega = e.delta_phi / std::sqrt(sum_uu);
  }
  e.delta_B_dc = e.sigma_omega / e.gamma;
  e.delta_B_detector = 1.0 / (std::sqrt(e.weighted_mean_snr * sum_uu) * e.gamma);
  return e;
}

std::vector<Harmonic> HarmonicFit::as_harmonics() const {
  std::vector<Harmonic> out;
  for (const auto& h : harmonics) out.push_back({h.frequency_hz, h.rms_t, h.phase_rad});
  return out;
}

HarmonicFit fit_harmonics(const PhaseSeries& phase, double line_frequency_hz,
                          int n_harmonics, const AtomicSpecies& s,
                          const MicrowaveDressing& dressing, const HarmonicFitOptions& opt) {
  validate(phase);
  require(n_harmonics >= 1, ErrorKind::kDomain, "fit_harmonics: need >= 1 harmonic");
  require(line_frequency_hz > 0.0, ErrorKind::kDomain, "fit_harmonics: line frequency <= 0");
  const std::size_t n = phase.phase.size();
  const double duration = phase.duration();
  require(duration * line_frequency_hz >= 2.0 * n_harmonics, ErrorKind::kConditioning,
          "fit_harmonics: record shorter than 2 line cycles per fitted harmonic");
  const int p = 2 + 2 * n_harmonics;
  require(n > static_cast<std::size_t>(4 * p), ErrorKind::kConditioning,
          "fit_harmonics: too few samples");

  const double t_mid = phase.time(0) + 0.5 * (duration - 1.0 / phase.fs_hz);
  const double ref = phase.phase[0];
  std::vector<double> omega_k(n_harmonics);
  for (int j = 0; j < n_harmonics; ++j) omega_k[j] = 2.0 * kPi * (2 * j + 1) * line_frequency_hz;

  // Basis rows in order; sin/cos advance by complex rotation, resynchronised
  // with exact values every 4096 samples.
  auto for_each_row = [&](auto&& visit) {
    std::vector<std::complex<double>> z(n_harmonics), step(n_harmonics);
    for (int j = 0; j < n_harmonics; ++j) step[j] = std::polar(1.0, omega_k[j] / phase.fs_hz);
    Eigen::VectorXd row(p);
    row(1) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = phase.time(i);
      if (i % 4096 == 0) {
        for (int j = 0; j < n_harmonics; ++j) z[j] = std::polar(1.0, omega_k[j] * t);
      }
      row(0) = t - t_mid;
      for (int j = 0; j < n_harmonics; ++j) {
        row(2 + 2 * j) = z[j].imag();
        row(3 + 2 * j) = z[j].real();
        const double re = z[j].real() * step[j].real() - z[j].imag() * step[j].imag();
        const double im = z[j].real() * step[j].imag() + z[j].imag() * step[j].real();
        z[j] = {re, im};
      }
      visit(i, row);
    }
  };

  std::vector<double> acc(static_cast<std::size_t>(p * p), 0.0);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  for_each_row([&](std::size_t i, const Eigen::VectorXd& row) {
    const double y = phase.phase[i] - ref;
    for (int a = 0; a < p; ++a) {
      const double ra = row(a);
      xty(a) += ra * y;
      for (int b = 0; b <= a; ++b) acc[static_cast<std::size_t>(a * p + b)] += ra * row(b);
    }
  });
  Eigen::MatrixXd xtx(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b <= a; ++b) xtx(a, b) = xtx(b, a) = acc[static_cast<std::size_t>(a * p + b)];
  const Eigen::VectorXd d = xtx.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd a = d.asDiagonal() * xtx * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const double cond = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
  require(eig.eigenvalues().minCoeff() > 0.0 && cond < 1e12, ErrorKind::kConditioning,
          "fit_harmonics: ill-conditioned basis (condition " + std::to_string(cond) + ")");
  const Eigen::MatrixXd cov = d.asDiagonal() * a.inverse() * d.asDiagonal();
  const Eigen::VectorXd beta = cov * xty;

  std::vector<double> resid(n);
  double rss = 0.0;
  for_each_row([&](std::size_t i, const Eigen::VectorXd& row) {
    resid[i] = (phase.phase[i] - ref) - row.dot(beta);
    rss += resid[i] * resid[i];
  });

  HarmonicFit out;
  out.line_frequency_hz = line_frequency_hz;
  out.residual_rms = std::sqrt(rss / static_cast<double>(n - p));
  out.B_est = invert_field(s, beta(0), dressing);
  out.gamma = gamma_at(s, out.B_est, dressing);

  const double res = opt.psd_resolution_hz > 0.0 ? opt.psd_resolution_hz
                                                  : std::max(4.0 / duration, 2.0);
  const auto psd = power_spectrum(resid, phase.fs_hz, res);
  for (int j = 0; j < n_harmonics; ++j) {
    const double f = (2 * j + 1) * line_frequency_hz;
    double acc = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < psd.psd.size(); ++k) {
      const double df = std::abs(psd.frequency_hz[k] - f);
      if (df <= opt.local_half_width_hz && df > 0.5 * psd.resolution_hz) {
        acc += psd.psd[k];
        ++count;
      }
    }
    if (count == 0) {
      acc = psd.band_mean(std::max(0.0, f - 4.0 * psd.resolution_hz),
                          f + 4.0 * psd.resolution_hz);
      count = 1;
    }
    // Variance of an equivalent independent-sample process at this frequency.
    const double s_eq = acc / count * phase.fs_hz / 2.0;
    const int is = 2 + 2 * j;
    const int ic = is + 1;
    const double bs = beta(is);
    const double bc = beta(ic);
    const double vs = cov(is, is) * s_eq;
    const double vc = cov(ic, ic) * s_eq;
    const double vsc = cov(is, ic) * s_eq;
    const double amp = std::hypot(bs, bc);
    const double var_amp = amp > 0.0 ? (bs * bs * vs + bc * bc * vc + 2.0 * bs * bc * vsc) / (amp * amp)
                                     : 0.5 * (vs + vc);
    const double var_th = amp > 0.0
                              ? (bc * bc * vs + bs * bs * vc - 2.0 * bs * bc * vsc) / std::pow(amp, 4)
                              : kPi * kPi;
    const double to_field = 2.0 * kPi * f / (out.gamma * std::numbers::sqrt2);
    FittedHarmonic h;
    h.frequency_hz = f;
    h.rms_t = amp * to_field;
    h.rms_uncertainty_t = std::sqrt(std::max(var_amp, 0.0)) * to_field;
    h.phase_rad = wrap_pi(std::atan2(bc, bs) + 0.5 * kPi);
    h.phase_uncertainty_rad = std::sqrt(std::max(var_th, 0.0));
    out.harmonics.push_back(h);
  }
  return out;
}

double critical_time(double n_sigma, double s_bb, const AtomicSpecies& s) {
  require(s_bb > 0.0, ErrorKind::kDomain, "critical_time: S_BB must be > 0");
  require(n_sigma > 0.0, ErrorKind::kDomain, "critical_time: n must be > 0");
  return kPi * kPi / (2.0 * n_sigma * n_sigma * s.gamma0 * s.gamma0 * s_bb);
}

RamseyOutcome ramsey_project(double phi) {
  const double half = 0.5 * kPi;
  if (std::abs(phi) <= half) return {phi, false};
  return {std::asin(std::sin(phi)), std::abs(wrap_pi(phi)) > half};
}

double max_enbw(double snr, double fs_hz) {
  require(snr > 0.0 && fs_hz > 0.0, ErrorKind::kDomain, "max_enbw: invalid arguments");
  return 0.5 * fs_hz * snr / std::pow(10.0, 0.6);
}

double threshold_snr_db(double band_hz, double fs_hz) {
  require(band_hz > 0.0 && fs_hz > 0.0, ErrorKind::kDomain,
          "threshold_snr_db: invalid arguments");
  return 6.0 + 10.0 * std::log10(2.0 * band_hz / fs_hz);
}

PassbandBudget passband_budget(double snr, double fs_hz, double band_hz) {
  return {max_enbw(snr, fs_hz), threshold_snr_db(band_hz, fs_hz)};
}

double phase_noise_psd_model(double f_hz, double s_bb, double snr, double fs_hz,
                             double gamma) {
  require(f_hz > 0.0 && snr > 0.0 && fs_hz > 0.0, ErrorKind::kDomain,
          "phase_noise_psd_model: invalid arguments");
  return gamma * gamma * s_bb / (4.0 * kPi * kPi * f_hz * f_hz) + 2.0 / (fs_hz * snr);
}

double phase_noise_corner(double s_bb, double snr, double fs_hz, double gamma) {
  return std::sqrt(gamma * gamma * s_bb / (4.0 * kPi * kPi) / (2.0 / (fs_hz * snr)));
}

double rms_noise_amplitude(const SpectrumEstimate& s, double f_max_hz) {
  require(!s.psd.empty() && s.frequency_hz.front() <= 1e-12 &&
              s.frequency_hz.back() >= f_max_hz,
          ErrorKind::kDomain, "rms_noise_amplitude: spectrum does not cover [0, f_max]");
  double acc = 0.0;
  for (std::size_t k = 1; k < s.psd.size(); ++k) {
    const double f0 = s.frequency_hz[k - 1];
    const double f1 = s.frequency_hz[k];
    if (f0 >= f_max_hz) break;
    if (f1 <= f_max_hz) {
      acc += 0.5 * (s.psd[k - 1] + s.psd[k]) * (f1 - f0);
    } else {
      const double u = (f_max_hz - f0) / (f1 - f0);
      const double p_end = s.psd[k - 1] + u * (s.psd[k] - s.psd[k - 1]);
      acc += 0.5 * (s.psd[k - 1] + p_end) * (f_max_hz - f0);
    }
  }
  return std::sqrt(acc);
}

double dc_sensitivity_from_residuals(double delta_phi, double tau_s, double fs_hz,
                                     double gamma) {
  require(tau_s > 0.0 && fs_hz > 0.0, ErrorKind::kDomain,
          "dc_sensitivity_from_residuals: tau and fs must be > 0");
  return 2.0 * delta_phi / (gamma * std::pow(tau_s, 1.5)) * std::sqrt(3.0 / fs_hz);
}

double dc_sensitivity_from_snr(double snr, double tau_s, double fs_hz, double gamma) {
  require(snr > 0.0 && tau_s > 0.0 && fs_hz > 0.0, ErrorKind::kDomain,
          "dc_sensitivity_from_snr: invalid arguments");
  return 1.0 / (gamma * std::pow(tau_s, 1.5)) * std::sqrt(12.0 / (fs_hz * snr));
}

double ac_sensitivity(double f_hz, double snr, double fs_hz, double tau_s, double gamma) {
  require(f_hz >= 0.0 && f_hz < 0.5 * fs_hz, ErrorKind::kDomain,
          "ac_sensitivity: f must lie in [0, fs/2)");
  require(snr > 0.0 && tau_s > 0.0, ErrorKind::kDomain, "ac_sensitivity: invalid arguments");
  return 2.0 * kPi * f_hz / (gamma * std::sqrt(fs_hz * tau_s * snr));
}

double crlb_frequency_variance(double snr, std::size_t n, double fs_hz) {
  require(n >= 3 && snr > 0.0, ErrorKind::kDomain, "crlb: need n >= 3 and SNR > 0");
  const double nn = static_cast<double>(n);
  return 12.0 * fs_hz * fs_hz / (snr * nn * (nn * nn - 1.0));
}

double crlb_frequency_variance_large_n(double snr, std::size_t n, double fs_hz) {
  require(n >= 3 && snr > 0.0, ErrorKind::kDomain, "crlb: need n >= 3 and SNR > 0");
  const double nn = static_cast<double>(n);
  return 12.0 * fs_hz * fs_hz / (snr * nn * nn * nn);
}

}  // namespace fidmag
