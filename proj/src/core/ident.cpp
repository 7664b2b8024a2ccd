#include "ident.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace fdi {

namespace {

struct Svd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
};

Svd thin_svd(const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// x = V diag(filter(s)) U^T b.
template <typename Filter>
Eigen::VectorXd spectral_solve(const Svd& svd, const Eigen::VectorXd& b, Filter filter) {
  const Eigen::VectorXd utb = svd.u.transpose() * b;
  Eigen::VectorXd scaled(svd.s.size());
  for (Eigen::Index i = 0; i < svd.s.size(); ++i) scaled(i) = filter(svd.s(i)) * utb(i);
  return svd.v * scaled;
}

Eigen::VectorXd min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.cols() == 0) return Eigen::VectorXd();
  const Svd svd = thin_svd(a);
  const double cutoff = kSvdFloor * (svd.s.size() ? svd.s(0) : 0.0);
  return spectral_solve(svd, b, [cutoff](double s) { return s > cutoff ? 1.0 / s : 0.0; });
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double lambda) {
  if (lambda == 0.0) return min_norm(a, b);
  const Svd svd = thin_svd(a);
  return spectral_solve(svd, b, [lambda](double s) { return s / (s * s + lambda); });
}

Eigen::VectorXd to_physical(const Eigen::VectorXd& xi, const Eigen::VectorXd& norms) {
  return xi.cwiseQuotient(norms);
}

std::vector<std::size_t> all_columns(const RealSystem& sys) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(sys.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

Coefficients solve_min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() < 1) fail(ErrorKind::degenerate_system, "least squares with no rows");
  if (a.rows() != b.size()) fail(ErrorKind::invalid_argument, "rhs length mismatch");
  if (a.cols() == 0 || a.cwiseAbs().maxCoeff() == 0.0)
    fail(ErrorKind::degenerate_system, "least squares on an all-zero matrix");
  const Svd svd = thin_svd(a);
  const double smax = svd.s(0);
  const double cutoff = kSvdFloor * smax;
  Coefficients out;
  out.values = spectral_solve(svd, b, [cutoff](double s) { return s > cutoff ? 1.0 / s : 0.0; });
  out.residual = (b - a * out.values).norm();
  const double bn = b.norm();
  out.relative_residual = bn > 0.0 ? out.residual / bn : 0.0;
  const double smin = svd.s(svd.s.size() - 1);
  out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  return out;
}

Coefficients lstsq(const RealSystem& sys) {
  auto c = solve_min_norm(sys.matrix, sys.rhs);
  c.values = to_physical(c.values, sys.column_norms);
  return c;
}

Coefficients lstsq(const FreqSystem& sys) { return lstsq(sys.stacked()); }

SupportRates support_rates(const RealSystem& sys) {
  const auto n = sys.cols();
  if (sys.rows() < n) fail(ErrorKind::invalid_argument, "support rates need rows >= columns");
  const Eigen::VectorXd full = solve_min_norm(sys.matrix, sys.rhs).values;
  SupportRates out;
  out.raw.assign(static_cast<std::size_t>(n), 0.0);
  Eigen::MatrixXd reduced(sys.rows(), n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Columns other than i, order preserved.
    if (i > 0) reduced.leftCols(i) = sys.matrix.leftCols(i);
    if (i + 1 < n) reduced.rightCols(n - 1 - i) = sys.matrix.rightCols(n - 1 - i);
    const Eigen::VectorXd xi = n > 1 ? min_norm(reduced, sys.rhs) : Eigen::VectorXd();
    double q = 0.0;
    for (Eigen::Index j = 0, k = 0; j < n; ++j) {
      if (j == i) continue;
      q += std::abs(full(j) - xi(k++));
    }
    out.raw[static_cast<std::size_t>(i)] = q;
  }
  const double total = std::accumulate(out.raw.begin(), out.raw.end(), 0.0);
  out.q.assign(static_cast<std::size_t>(n), 0.0);
  if (!(total > 0.0)) {
    out.degenerate = true;
    std::fill(out.q.begin(), out.q.end(), 1.0 / static_cast<double>(n));
    return out;
  }
  for (std::size_t i = 0; i < out.q.size(); ++i) out.q[i] = out.raw[i] / total;
  return out;
}

SupportRates support_rates(const FreqSystem& sys) { return support_rates(sys.stacked()); }

const char* to_string(SelectionPolicy::Mode m) noexcept {
  switch (m) {
    case SelectionPolicy::Mode::gap: return "gap";
    case SelectionPolicy::Mode::fixed_k: return "fixed_k";
    case SelectionPolicy::Mode::threshold: return "threshold";
  }
  return "?";
}

std::vector<std::size_t> select_terms(const SupportRates& rates, const SelectionPolicy& policy) {
  const auto& q = rates.q;
  const std::size_t n = q.size();
  if (n == 0) fail(ErrorKind::invalid_argument, "no support rates to select from");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // stable_sort keeps library order among equal rates.
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return q[a] > q[b]; });

  std::size_t count = 0;
  switch (policy.mode) {
    case SelectionPolicy::Mode::gap: {
      if (rates.degenerate)
        fail(ErrorKind::degenerate_system, "support rates are uniform; no gap to cut at");
      if (n == 1) {
        count = 1;
        break;
      }
      const std::size_t last = std::min(n - 1, policy.max_gap_rank);
      double best = -1.0;
      for (std::size_t r = 1; r <= last; ++r) {
        const double hi = q[order[r - 1]];
        const double lo = q[order[r]];
        double ratio = 1.0;
        if (lo > 0.0) ratio = hi / lo;
        else if (hi > 0.0) ratio = std::numeric_limits<double>::infinity();
        if (ratio > best) {
          best = ratio;
          count = r;
        }
      }
      break;
    }
    case SelectionPolicy::Mode::fixed_k:
      if (policy.k < 1 || policy.k > n)
        fail(ErrorKind::invalid_argument, "fixed_k must be in 1..term count");
      count = policy.k;
      break;
    case SelectionPolicy::Mode::threshold:
      while (count < n && q[order[count]] >= policy.min_q) ++count;
      if (count == 0)
        fail(ErrorKind::invalid_argument, "no support rate reaches the selection threshold");
      break;
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Coefficients fit_selected(const RealSystem& sys, const std::vector<std::size_t>& indices) {
  if (indices.empty()) fail(ErrorKind::invalid_argument, "fit needs at least one term");
  for (auto i : indices)
    if (i >= static_cast<std::size_t>(sys.cols()))
      fail(ErrorKind::invalid_argument, "selected column out of range");
  return lstsq(sys.select(indices));
}

const char* to_string(Domain d) noexcept {
  switch (d) {
    case Domain::freq: return "freq";
    case Domain::timespace: return "timespace";
    case Domain::lowpass_then_timespace: return "lowpass_then_timespace";
  }
  return "?";
}

const char* to_string(Selector s) noexcept {
  switch (s) {
    case Selector::csr: return "csr";
    case Selector::stlm: return "stlm";
    case Selector::st_ridge: return "st_ridge";
    case Selector::known: return "known";
  }
  return "?";
}

Domain parse_domain(const std::string& s) {
  if (s == "freq") return Domain::freq;
  if (s == "timespace") return Domain::timespace;
  if (s == "lowpass" || s == "lowpass_then_timespace") return Domain::lowpass_then_timespace;
  fail(ErrorKind::invalid_argument, "unknown domain '" + s + "'");
}

Selector parse_selector(const std::string& s) {
  if (s == "csr") return Selector::csr;
  if (s == "stlm") return Selector::stlm;
  if (s == "st_ridge" || s == "stridge") return Selector::st_ridge;
  if (s == "known") return Selector::known;
  fail(ErrorKind::invalid_argument, "unknown selection method '" + s + "'");
}

std::vector<std::string> IdentResult::selected_names() const {
  std::vector<std::string> out;
  for (auto i : selected) out.push_back(library.at(i));
  return out;
}

std::optional<double> IdentResult::coefficient_of(const std::string& term) const {
  for (std::size_t k = 0; k < selected.size(); ++k)
    if (library.at(selected[k]) == term) return coefficients.values(static_cast<Eigen::Index>(k));
  return std::nullopt;
}

std::string IdentResult::equation_string() const {
  std::string out = lhs_order == 2 ? "u_tt =" : "u_t =";
  if (selected.empty()) return out + " 0";
  char buf[64];
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const double c = coefficients.values(static_cast<Eigen::Index>(k));
    const auto& name = library.at(selected[k]);
    if (k == 0) std::snprintf(buf, sizeof buf, " %.4f", c);
    else std::snprintf(buf, sizeof buf, " %c %.4f", c < 0 ? '-' : '+', std::abs(c));
    out += buf;
    if (name != "1") out += "*" + name;
  }
  return out;
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json IdentResult::to_json() const {
  nlohmann::json sel = nlohmann::json::array();
  for (std::size_t k = 0; k < selected.size(); ++k)
    sel.push_back({{"term", library.at(selected[k])},
                   {"coefficient", coefficients.values(static_cast<Eigen::Index>(k))}});
  nlohmann::json q = nlohmann::json::object();
  if (rates)
    for (std::size_t i = 0; i < library.size(); ++i) q[library[i]] = rates->q[i];
  nlohmann::json j{{"method", to_string(method)},
                   {"domain", to_string(domain)},
                   {"selected", sel},
                   {"support_rates", q},
                   {"residual", finite_or_null(coefficients.relative_residual)},
                   {"condition", finite_or_null(coefficients.condition)},
                   {"converged", converged},
                   {"config", config},
                   {"equation_string", equation_string()}};
  if (rates) j["support_degenerate"] = rates->degenerate;
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

IdentResult stlm(const RealSystem& sys, const StlmOptions& opts) {
  if (!opts.final_k && !opts.threshold)
    fail(ErrorKind::invalid_argument, "stlm needs a final term count or a threshold");
  if (opts.final_k && (*opts.final_k < 1 || *opts.final_k > static_cast<std::size_t>(sys.cols())))
    fail(ErrorKind::invalid_argument, "stlm final term count out of range");
  std::vector<std::size_t> active = all_columns(sys);
  while (true) {
    const RealSystem sub = sys.select(active);
    const Eigen::VectorXd xi = solve_min_norm(sub.matrix, sub.rhs).values;
    Eigen::Index weakest = 0;
    xi.cwiseAbs().minCoeff(&weakest);
    const bool keep_going = opts.final_k ? active.size() > *opts.final_k
                                         : std::abs(xi(weakest)) < *opts.threshold;
    if (!keep_going || active.size() == 1) break;
    active.erase(active.begin() + weakest);
  }
  IdentResult r;
  r.method = Selector::stlm;
  r.library = sys.column_names;
  r.selected = active;
  r.coefficients = fit_selected(sys, active);
  return r;
}

IdentResult st_ridge(const RealSystem& sys, const RidgeOptions& opts) {
  if (opts.lambda < 0.0 || opts.tol < 0.0 || opts.max_iter < 1)
    fail(ErrorKind::invalid_argument, "ridge options out of range");
  IdentResult r;
  r.method = Selector::st_ridge;
  r.library = sys.column_names;
  std::vector<std::size_t> active = all_columns(sys);
  Eigen::VectorXd xi = ridge_solve(sys.matrix, sys.rhs, opts.lambda);
  r.converged = false;
  for (int it = 0; it < opts.max_iter; ++it) {
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < active.size(); ++k)
      if (std::abs(xi(static_cast<Eigen::Index>(k))) >= opts.tol) keep.push_back(active[k]);
    if (keep.size() == active.size()) {
      r.converged = true;
      break;
    }
    active = keep;
    if (active.empty()) {
      r.converged = true;
      break;
    }
    const RealSystem sub = sys.select(active);
    xi = ridge_solve(sub.matrix, sub.rhs, opts.lambda);
  }
  if (!r.converged) r.notes.push_back("st_ridge did not reach a fixed support");
  r.selected = active;
  if (active.empty()) {
    r.notes.push_back("empty support: tolerance exceeds every coefficient");
    r.coefficients.values = Eigen::VectorXd();
    r.coefficients.residual = sys.rhs.norm();
    r.coefficients.relative_residual = 1.0;
    return r;
  }
  // Report the ridge coefficients themselves so lambda = 0 reduces to lstsq.
  const RealSystem sub = sys.select(active);
  Coefficients c = solve_min_norm(sub.matrix, sub.rhs);
  c.values = to_physical(xi, sub.column_norms);
  c.residual = (sub.rhs - sub.matrix * xi).norm();
  const double bn = sub.rhs.norm();
  c.relative_residual = bn > 0.0 ? c.residual / bn : 0.0;
  r.coefficients = c;
  return r;
}

}  // namespace fdi
