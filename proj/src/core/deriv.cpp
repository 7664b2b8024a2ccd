#include "deriv.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace fdi {

const char* to_string(DiffMethod m) noexcept {
  return m == DiffMethod::finite_difference ? "fd" : "poly";
}

DiffMethod parse_diff_method(const std::string& s) {
  if (s == "fd" || s == "finite_difference") return DiffMethod::finite_difference;
  if (s == "poly" || s == "local_polynomial") return DiffMethod::local_polynomial;
  fail(ErrorKind::invalid_argument, "unknown differentiation method '" + s + "'");
}

void DiffConfig::validate(int max_order) const {
  if (max_order < 1 || max_order > kMaxDerivativeOrder)
    fail(ErrorKind::invalid_argument, "derivative order must be in 1..4");
  if (step_stride < 1) fail(ErrorKind::invalid_argument, "step stride must be >= 1");
  if (method == DiffMethod::finite_difference) {
    if (fd_order < 2 || fd_order % 2 != 0)
      fail(ErrorKind::invalid_argument, "fd order of accuracy must be an even integer >= 2");
  } else {
    if (poly_window < 3 || poly_window % 2 == 0)
      fail(ErrorKind::invalid_argument, "polynomial window must be odd and >= 3");
    if (poly_degree < max_order)
      fail(ErrorKind::invalid_argument, "polynomial degree " + std::to_string(poly_degree) +
                                            " below derivative order " +
                                            std::to_string(max_order));
    if (poly_window < poly_degree + 1)
      fail(ErrorKind::invalid_argument, "polynomial window must exceed the degree");
  }
}

std::vector<double> fd_weights(double x0, std::span<const double> nodes, int order) {
  const std::size_t n = nodes.size();
  const auto m = static_cast<std::size_t>(order);
  // c[j][k]: weight of node j for derivative k.
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k)
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = c[j][m];
  return w;
}

std::vector<double> local_poly_weights(double x0, std::span<const double> nodes, int degree,
                                       int order) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const int cols = degree + 1;
  // Scale offsets into [-1, 1] to keep the Vandermonde matrix well conditioned.
  double scale = 0.0;
  for (double v : nodes) scale = std::max(scale, std::abs(v - x0));
  if (scale == 0.0) scale = 1.0;
  Eigen::MatrixXd vander(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = (nodes[static_cast<std::size_t>(i)] - x0) / scale;
    double p = 1.0;
    for (int k = 0; k < cols; ++k) {
      vander(i, k) = p;
      p *= s;
    }
  }
  // Row `order` of the pseudo-inverse gives the fitted coefficient of s^order;
  // at s = 0 the derivative is order! times that coefficient.
  const Eigen::MatrixXd pinv = vander.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(n, n));
  double factorial = 1.0;
  for (int k = 2; k <= order; ++k) factorial *= k;
  const double factor = factorial / std::pow(scale, order);
  std::vector<double> w(nodes.size());
  for (Eigen::Index i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = factor * pinv(order, i);
  return w;
}

std::size_t stencil_margin(int order, const DiffConfig& cfg) {
  const auto s = static_cast<std::size_t>(cfg.step_stride);
  if (cfg.method == DiffMethod::finite_difference) {
    const int half = (order + 1) / 2 - 1 + cfg.fd_order / 2;
    return s * static_cast<std::size_t>(half);
  }
  return s * static_cast<std::size_t>(cfg.poly_window / 2);
}

namespace {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

/// Per-position stencils along one axis of length n: a shared interior stencil
/// plus one-sided stencils for the first and last `margin` points.
struct AxisPlan {
  std::size_t margin = 0;
  Stencil interior;
  std::vector<Stencil> head;  // positions 0 .. margin-1
  std::vector<Stencil> tail;  // positions n-margin .. n-1
};

std::vector<double> weights_for(const DiffConfig& cfg, double x0, std::span<const double> nodes,
                                int order) {
  if (cfg.method == DiffMethod::finite_difference) return fd_weights(x0, nodes, order);
  return local_poly_weights(x0, nodes, cfg.poly_degree, order);
}

AxisPlan make_plan(std::size_t n, int order, const DiffConfig& cfg, double h) {
  AxisPlan plan;
  plan.margin = stencil_margin(order, cfg);
  const int stride = cfg.step_stride;
  const auto half = static_cast<int>(plan.margin) / stride;
  const std::size_t width = 2 * plan.margin + 1;
  // One-sided stencils use unit spacing with enough points for the order.
  std::size_t side_count = static_cast<std::size_t>(2 * half + 1);
  if (cfg.method == DiffMethod::finite_difference)
    side_count = std::max(side_count, static_cast<std::size_t>(order + cfg.fd_order));
  if (n < width || n < side_count)
    fail(ErrorKind::invalid_argument,
         "stencil of width " + std::to_string(std::max(width, side_count)) +
             " exceeds axis length " + std::to_string(n));

  const double scale = 1.0 / std::pow(h, order);
  {
    std::vector<double> nodes;
    for (int j = -half; j <= half; ++j) {
      plan.interior.offsets.push_back(j * stride);
      nodes.push_back(static_cast<double>(j * stride));
    }
    plan.interior.weights = weights_for(cfg, 0.0, nodes, order);
    for (auto& w : plan.interior.weights) w *= scale;
  }
  auto one_sided = [&](std::size_t pos) {
    const std::size_t start =
        std::min(pos >= side_count / 2 ? pos - side_count / 2 : 0, n - side_count);
    Stencil st;
    std::vector<double> nodes;
    for (std::size_t j = 0; j < side_count; ++j) {
      const auto off = static_cast<int>(start + j) - static_cast<int>(pos);
      st.offsets.push_back(off);
      nodes.push_back(static_cast<double>(off));
    }
    st.weights = weights_for(cfg, 0.0, nodes, order);
    for (auto& w : st.weights) w *= scale;
    return st;
  };
  for (std::size_t i = 0; i < plan.margin; ++i) {
    plan.head.push_back(one_sided(i));
    plan.tail.push_back(one_sided(n - plan.margin + i));
  }
  return plan;
}

void apply_line(const AxisPlan& plan, std::span<const double> in, std::span<double> out) {
  const std::size_t n = in.size();
  auto apply = [&](const Stencil& st, std::size_t i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < st.offsets.size(); ++k)
      acc += st.weights[k] * in[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + st.offsets[k])];
    out[i] = acc;
  };
  for (std::size_t i = 0; i < plan.margin; ++i) apply(plan.head[i], i);
  for (std::size_t i = plan.margin; i + plan.margin < n; ++i) apply(plan.interior, i);
  for (std::size_t i = 0; i < plan.margin; ++i) apply(plan.tail[i], n - plan.margin + i);
}

}  // namespace

Derivative differentiate(const Field& f, std::size_t axis, int order, const DiffConfig& cfg) {
  if (axis >= f.rank()) fail(ErrorKind::invalid_argument, "axis out of range");
  cfg.validate(order);
  const std::size_t n = f.dims()[axis];
  const AxisPlan plan = make_plan(n, order, cfg, f.spacings()[axis]);

  const auto src = f.data();
  std::vector<double> out(f.size());
  const std::size_t stride = f.stride(axis);
  const std::size_t block = stride * n;  // elements spanned by one outer index
  std::vector<double> line_in(n), line_out(n);
  for (std::size_t outer = 0; outer < f.size(); outer += block) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t base = outer + inner;
      if (stride == 1) {
        apply_line(plan, src.subspan(base, n), std::span<double>(out).subspan(base, n));
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) line_in[i] = src[base + i * stride];
      apply_line(plan, line_in, line_out);
      for (std::size_t i = 0; i < n; ++i) out[base + i * stride] = line_out[i];
    }
  }
  return Derivative{f.with_data(std::move(out)), plan.margin};
}

}  // namespace fdi
