#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "field.hpp"

namespace fdi {

enum class DiffMethod { finite_difference, local_polynomial };

const char* to_string(DiffMethod m) noexcept;
DiffMethod parse_diff_method(const std::string& s);

struct DiffConfig {
  DiffMethod method = DiffMethod::finite_difference;
  int fd_order = 2;      // even accuracy order of the central stencil
  int poly_degree = 6;
  int poly_window = 21;  // odd, samples per fit
  int step_stride = 1;   // stencil points sit stride samples apart

  /// Throws invalid_argument when the config cannot produce a derivative of
  /// `max_order`.
  void validate(int max_order) const;
  bool operator==(const DiffConfig&) const = default;
};

inline constexpr int kMaxDerivativeOrder = 4;

/// Samples per end of an axis where the centered stencil does not fit.
std::size_t stencil_margin(int order, const DiffConfig& cfg);

struct Derivative {
  Field field;
  /// Samples at each end of the differentiated axis that were filled with a
  /// one-sided formula and should be trimmed before use.
  std::size_t margin = 0;
};

Derivative differentiate(const Field& f, std::size_t axis, int order, const DiffConfig& cfg);

/// Finite-difference weights for the `order`-th derivative at `x0` from
/// values at `nodes` (Fornberg's recursion).
std::vector<double> fd_weights(double x0, std::span<const double> nodes, int order);

/// Weights of a least-squares polynomial fit of `degree` over the unit-spaced
/// offsets `nodes`, returning the `order`-th derivative at `x0`.
std::vector<double> local_poly_weights(double x0, std::span<const double> nodes, int degree,
                                       int order);

}  // namespace fdi
