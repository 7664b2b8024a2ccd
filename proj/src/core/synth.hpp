#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "candlib.hpp"
#include "field.hpp"

namespace fdi {

inline constexpr const char* kCatalogVersion = "fdi-catalog-1";

struct TrueTerm {
  TermDescriptor term;
  double coefficient = 0.0;
};

struct EquationSpec {
  std::string name;
  std::map<std::string, double> coefficients;
  std::vector<TrueTerm> true_terms;
  int lhs_order = 1;

  void validate() const;
  std::vector<std::string> support() const;  // true term names
};

/// Uniform periodic grid in space plus an inclusive time interval. Entries
/// are per axis with time last; spatial axis a spans [lower, lower + extent)
/// with `points` samples, time spans [0, extent] with `points` samples.
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> extent;
  std::vector<std::size_t> points;
  int substeps = 1;  // solver steps per output interval

  void validate() const;
  std::size_t spatial_rank() const noexcept { return points.size() - 1; }
};

struct NoiseSpec {
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

/// Initial condition u0 evaluated at spatial coordinates (x[, y[, z]]).
using InitialCondition = std::function<double(std::span<const double>)>;

const std::vector<std::string>& equation_names();
EquationSpec equation_spec(const std::string& name);
GridSpec default_grid(const std::string& name);
InitialCondition default_initial_condition(const std::string& name);

/// Pseudo-spectral solution with periodic boundaries. ETDRK4 for first-order
/// equations, classical RK4 on (u, u_t) for second-order ones.
Field solve_reference(const EquationSpec& eq, const GridSpec& grid);
Field solve_reference(const EquationSpec& eq, const GridSpec& grid, const InitialCondition& u0);

/// u + alpha * std(u) * g with g drawn from a counter-based generator in
/// row-major grid order.
Field inject_noise(const Field& f, const NoiseSpec& noise);

nlohmann::json equation_to_json(const EquationSpec& eq);
EquationSpec equation_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const nlohmann::json& j);

}  // namespace fdi
