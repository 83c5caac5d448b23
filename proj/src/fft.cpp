#include "fidmag/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "fidmag/errors.hpp"

namespace fidmag::fft {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<Complex> complex_transform(std::span<const Complex> x, int sign) {
  const auto n = x.size();
  if (n == 0) return {};
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  require(buf != nullptr, ErrorKind::kNumeric, "fftw_malloc failed");
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE);
  }
  std::memcpy(buf, x.data(), sizeof(fftw_complex) * n);
  fftw_execute(plan);
  std::vector<Complex> out(n);
  std::memcpy(static_cast<void*>(out.data()), buf, sizeof(fftw_complex) * n);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

}  // namespace

RealForward::RealForward(std::size_t n) : n_(n) {
  require(n >= 2, ErrorKind::kDomain, "FFT length must be at least 2");
  in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  out_ = fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1));
  require(in_ && out_, ErrorKind::kNumeric, "fftw_malloc failed");
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_,
                               static_cast<fftw_complex*>(out_), FFTW_ESTIMATE);
}

RealForward::~RealForward() {
  {
    std::lock_guard lock(planner_mutex());
    if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  fftw_free(in_);
  fftw_free(out_);
}

void RealForward::execute(std::span<const double> in, std::vector<Complex>& out) {
  require(in.size() == n_, ErrorKind::kDomain, "FFT input length mismatch");
  std::copy(in.begin(), in.end(), in_);
  fftw_execute(static_cast<fftw_plan>(plan_));
  out.resize(n_ / 2 + 1);
  std::memcpy(out.data(), out_, sizeof(fftw_complex) * out.size());
}

std::vector<Complex> forward(std::span<const Complex> x) {
  return complex_transform(x, FFTW_FORWARD);
}

std::vector<Complex> inverse(std::span<const Complex> x) {
  return complex_transform(x, FFTW_BACKWARD);
}

std::vector<Complex> forward_real(std::span<const double> x) {
  RealForward plan(x.size());
  std::vector<Complex> out;
  plan.execute(x, out);
  return out;
}

}  // namespace fidmag::fft
