#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "candlib.hpp"
#include "deriv.hpp"
#include "field.hpp"
#include "freqsys.hpp"

namespace fdi {

inline constexpr double kSvdFloor = 1e-12;

struct Coefficients {
  Eigen::VectorXd values;  // physical scale
  double residual = 0.0;   // ||rhs - A xi||, normalized-column system
  double relative_residual = 0.0;
  double condition = 0.0;  // s_max / s_min over all singular values
};

/// Minimum-norm least-squares solve through the SVD, dropping singular values
/// below kSvdFloor * s_max. Throws degenerate_system for an all-zero matrix.
Coefficients solve_min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Least squares on a system, reported in physical scale.
Coefficients lstsq(const RealSystem& sys);
Coefficients lstsq(const FreqSystem& sys);

struct SupportRates {
  std::vector<double> q;      // normalized rates, sum to 1
  std::vector<double> raw;    // un-normalized column-deletion changes
  bool degenerate = false;    // every deletion left the solution unchanged
};

/// Candidate Support Rates: how far the least-squares solution moves when
/// each column is removed, normalized to sum to one.
SupportRates support_rates(const RealSystem& sys);
SupportRates support_rates(const FreqSystem& sys);

struct SelectionPolicy {
  enum class Mode { gap, fixed_k, threshold };
  Mode mode = Mode::gap;
  std::size_t k = 0;
  double min_q = 0.0;
  std::size_t max_gap_rank = 8;

  static SelectionPolicy gap() { return {}; }
  static SelectionPolicy fixed(std::size_t k) { return {Mode::fixed_k, k, 0.0}; }
  static SelectionPolicy threshold(double q) { return {Mode::threshold, 0, q}; }
};

const char* to_string(SelectionPolicy::Mode m) noexcept;

/// Indices of the selected terms in library order.
std::vector<std::size_t> select_terms(const SupportRates& q, const SelectionPolicy& policy);

/// Least squares on the chosen columns only, physical scale.
Coefficients fit_selected(const RealSystem& sys, const std::vector<std::size_t>& indices);

struct StlmOptions {
  std::optional<std::size_t> final_k;
  std::optional<double> threshold;  // on normalized-column coefficients
};

struct RidgeOptions {
  double lambda = 1e-5;
  double tol = 1e-3;  // on normalized-column coefficients
  int max_iter = 25;
};

enum class Domain { freq, timespace, lowpass_then_timespace };
enum class Selector { csr, stlm, st_ridge, known };

const char* to_string(Domain d) noexcept;
const char* to_string(Selector s) noexcept;
Domain parse_domain(const std::string& s);
Selector parse_selector(const std::string& s);

struct IdentResult {
  Selector method = Selector::csr;
  Domain domain = Domain::freq;
  int lhs_order = 1;
  std::vector<std::string> library;
  std::vector<std::size_t> selected;  // library order
  Coefficients coefficients;          // one per selected term
  std::optional<SupportRates> rates;
  bool converged = true;
  std::vector<std::string> notes;
  nlohmann::json config;

  std::vector<std::string> selected_names() const;
  std::optional<double> coefficient_of(const std::string& term) const;
  /// e.g. "u_t = -0.9981*u*u_x + 0.0504*u_xx".
  std::string equation_string() const;
  nlohmann::json to_json() const;
};

IdentResult stlm(const RealSystem& sys, const StlmOptions& opts);
IdentResult st_ridge(const RealSystem& sys, const RidgeOptions& opts);

struct PipelineConfig {
  std::optional<LibrarySpec> library;  // empty: standard library for the field
  DiffConfig diff;
  std::optional<CutoffSpec> cutoff;    // empty: default_cutoff(rank)
  Domain domain = Domain::freq;
  Selector selector = Selector::csr;
  SelectionPolicy policy;
  StlmOptions stlm{std::size_t{2}, std::nullopt};
  RidgeOptions ridge;
  std::vector<TermDescriptor> known_terms;  // Selector::known
  std::size_t sample_stride = 1;
  std::optional<CutoffSpec> lowpass_cutoff;
  bool normalize = true;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

/// Differentiation defaults: local polynomial for noisy 1-D data, fourth-order
/// differences otherwise, with stride 2 in three dimensions.
DiffConfig default_diff(std::size_t spatial_dims, bool noisy);
PipelineConfig default_pipeline(std::size_t spatial_dims, bool noisy);

/// Library evaluation, domain-specific assembly, selection and the final fit.
/// Errors are rethrown with the failing stage attached.
IdentResult identify(const Field& f, const PipelineConfig& cfg);

/// The assembled system identify() would select on, exposed for harnesses
/// that compare selectors on identical systems.
RealSystem assemble_system(const Field& f, const PipelineConfig& cfg);

/// Selection + fit on an already assembled system.
IdentResult identify_system(const RealSystem& sys, const PipelineConfig& cfg, int lhs_order);

}  // namespace fdi
