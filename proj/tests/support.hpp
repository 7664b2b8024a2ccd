#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "field.hpp"

namespace fdi::testing {

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

inline std::vector<Axis> default_labels(std::size_t rank) {
  static const Axis spatial[] = {Axis::x, Axis::y, Axis::z};
  std::vector<Axis> l;
  for (std::size_t a = 0; a + 1 < rank; ++a) l.push_back(spatial[a]);
  l.push_back(Axis::t);
  return l;
}

inline Field make_field(std::vector<std::size_t> dims, std::vector<double> data,
                        std::vector<double> spacings = {}) {
  if (spacings.empty()) spacings.assign(dims.size(), 1.0);
  const auto labels = default_labels(dims.size());
  return Field(std::move(dims), std::move(spacings), labels, std::move(data));
}

inline Field random_field(std::vector<std::size_t> dims, std::uint64_t seed) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return make_field(std::move(dims), random_values(n, seed));
}

/// 1-D-in-space field f(x) repeated over `nt` time samples.
template <typename Fn>
Field spatial_profile(std::size_t nx, double h, std::size_t nt, Fn&& f, double x0 = 0.0) {
  std::vector<double> data(nx * nt);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nt; ++j) data[i * nt + j] = f(x0 + static_cast<double>(i) * h);
  return make_field({nx, nt}, std::move(data), {h, 1.0});
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("fdi-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fdi::testing
