#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "error.hpp"

namespace fdi {

namespace {

// Planner calls are not reentrant in FFTW.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<int> as_int_dims(std::span<const std::size_t> dims) {
  std::vector<int> n(dims.begin(), dims.end());
  return n;
}

std::vector<Complex> c2c(std::span<const std::size_t> dims, std::span<const Complex> in, int sign) {
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (in.size() != total) fail(ErrorKind::invalid_argument, "fft: size mismatch");
  std::vector<Complex> buf(in.begin(), in.end());
  auto n = as_int_dims(dims);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft(static_cast<int>(n.size()), n.data(),
                         reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()), sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return buf;
}

}  // namespace

std::vector<Complex> fft_forward(std::span<const std::size_t> dims, std::span<const Complex> in) {
  return c2c(dims, in, FFTW_FORWARD);
}

std::vector<Complex> fft_inverse(std::span<const std::size_t> dims, std::span<const Complex> in) {
  auto out = c2c(dims, in, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= scale;
  return out;
}

RealFft::RealFft(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  real_size_ = 1;
  for (auto d : dims_) real_size_ *= d;
  spectral_size_ = real_size_ / dims_.back() * (dims_.back() / 2 + 1);
  rbuf_.resize(real_size_);
  cbuf_.resize(spectral_size_);
  auto n = as_int_dims(dims_);
  std::lock_guard lock(planner_mutex());
  fwd_ = fftw_plan_dft_r2c(static_cast<int>(n.size()), n.data(), rbuf_.data(),
                           reinterpret_cast<fftw_complex*>(cbuf_.data()), FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r(static_cast<int>(n.size()), n.data(),
                           reinterpret_cast<fftw_complex*>(cbuf_.data()), rbuf_.data(),
                           FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

void RealFft::forward(std::span<const double> in, std::span<Complex> out) {
  std::copy(in.begin(), in.end(), rbuf_.begin());
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::copy(cbuf_.begin(), cbuf_.end(), out.begin());
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) {
  // c2r destroys its input, so always go through the owned buffer.
  std::copy(in.begin(), in.end(), cbuf_.begin());
  fftw_execute(static_cast<fftw_plan>(inv_));
  const double scale = 1.0 / static_cast<double>(real_size_);
  std::transform(rbuf_.begin(), rbuf_.end(), out.begin(), [scale](double v) { return v * scale; });
}

}  // namespace fdi
