#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fidmag::fft {

using Complex = std::complex<double>;

/// Reusable real-to-complex transform of fixed length n (n/2+1 output bins).
/// Plans are created under a global lock, execution is lock-free, so
/// separate instances may run on separate threads.
class RealForward {
 public:
  explicit RealForward(std::size_t n);
  ~RealForward();
  RealForward(const RealForward&) = delete;
  RealForward& operator=(const RealForward&) = delete;

  std::size_t size() const { return n_; }
  /// Writes n/2+1 bins into `out` (resized as needed).
  void execute(std::span<const double> in, std::vector<Complex>& out);

 private:
  std::size_t n_;
  double* in_ = nullptr;
  void* out_ = nullptr;
  void* plan_ = nullptr;
};

/// Unnormalised complex transforms of arbitrary length.
std::vector<Complex> forward(std::span<const Complex> x);
std::vector<Complex> inverse(std::span<const Complex> x);
std::vector<Complex> forward_real(std::span<const double> x);

}  // namespace fidmag::fft
