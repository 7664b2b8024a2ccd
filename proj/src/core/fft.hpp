#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fdi {

using Complex = std::complex<double>;

/// Unnormalized forward complex DFT over every axis of a row-major array.
std::vector<Complex> fft_forward(std::span<const std::size_t> dims, std::span<const Complex> in);
/// Inverse of fft_forward, including the 1/N factor.
std::vector<Complex> fft_inverse(std::span<const std::size_t> dims, std::span<const Complex> in);

/// Reusable real<->half-complex transform pair over a fixed row-major shape.
/// The half-spectrum keeps n_last/2+1 entries along the last axis.
class RealFft {
 public:
  explicit RealFft(std::vector<std::size_t> dims);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t real_size() const noexcept { return real_size_; }
  std::size_t spectral_size() const noexcept { return spectral_size_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }

  void forward(std::span<const double> in, std::span<Complex> out);
  /// Normalized: inverse(forward(x)) == x.
  void inverse(std::span<const Complex> in, std::span<double> out);

 private:
  std::vector<std::size_t> dims_;
  std::size_t real_size_ = 0;
  std::size_t spectral_size_ = 0;
  std::vector<double> rbuf_;
  std::vector<Complex> cbuf_;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

}  // namespace fdi
