#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "deriv.hpp"
#include "error.hpp"
#include "support.hpp"

using namespace fdi;
using namespace fdi::testing;

namespace {

constexpr double kPi = std::numbers::pi;

/// Max |f' - exact| over samples outside the margin along x (axis 0).
template <typename Exact>
double interior_error(const Derivative& d, std::size_t nx, std::size_t nt, double h, Exact&& exact,
                      double x0 = 0.0) {
  double worst = 0.0;
  for (std::size_t i = d.margin; i + d.margin < nx; ++i)
    for (std::size_t j = 0; j < nt; ++j)
      worst = std::max(worst, std::abs(d.field[i * nt + j] - exact(x0 + static_cast<double>(i) * h)));
  return worst;
}

double sin_error(std::size_t n, int order, int fd_order) {
  const double h = 2 * kPi / static_cast<double>(n);
  const auto f = spatial_profile(n, h, 2, [](double x) { return std::sin(x); });
  DiffConfig cfg;
  cfg.fd_order = fd_order;
  const auto d = differentiate(f, 0, order, cfg);
  const double phase = order * kPi / 2;
  return interior_error(d, n, 2, h, [&](double x) { return std::sin(x + phase); });
}

}  // namespace

TEST_CASE("central differences are exact on quadratics") {
  const double h = 0.1;
  const auto f = spatial_profile(40, h, 3, [](double x) { return x * x; }, -2.0);
  const auto d = differentiate(f, 0, 2, DiffConfig{});
  CHECK(interior_error(d, 40, 3, h, [](double) { return 2.0; }, -2.0) <= 1e-10);
}

TEST_CASE("second-order first derivative of sine obeys the truncation bound") {
  const std::size_t n = 256;
  const double h = 2 * kPi / n;
  const double bound = h * h / 6.0 * (1 + 1e-6);
  CHECK(sin_error(n, 1, 2) <= bound);
}

TEST_CASE("local polynomial reproduces a quintic's third derivative") {
  const double h = 0.05;
  const auto p = [](double x) { return 1 - 2 * x + 0.5 * x * x * x - 0.3 * std::pow(x, 4) + 0.1 * std::pow(x, 5); };
  const auto p3 = [](double x) { return 3.0 - 7.2 * x + 6.0 * x * x; };
  const auto f = spatial_profile(80, h, 2, p, -2.0);
  DiffConfig cfg;
  cfg.method = DiffMethod::local_polynomial;
  cfg.poly_degree = 6;
  cfg.poly_window = 21;
  const auto d = differentiate(f, 0, 3, cfg);
  CHECK(interior_error(d, 80, 2, h, p3, -2.0) <= 1e-8);
  CHECK(d.margin == 10);
}

TEST_CASE("Fornberg weights for the standard stencils") {
  const double nodes3[] = {-1, 0, 1};
  const auto w2 = fd_weights(0.0, nodes3, 2);
  CHECK(w2[0] == doctest::Approx(1.0));
  CHECK(w2[1] == doctest::Approx(-2.0));
  CHECK(w2[2] == doctest::Approx(1.0));
  const double nodes5[] = {-2, -1, 0, 1, 2};
  const auto w1 = fd_weights(0.0, nodes5, 1);
  CHECK(w1[0] == doctest::Approx(1.0 / 12));
  CHECK(w1[1] == doctest::Approx(-8.0 / 12));
  CHECK(w1[2] == doctest::Approx(0.0));
  CHECK(w1[3] == doctest::Approx(8.0 / 12));
  CHECK(w1[4] == doctest::Approx(-1.0 / 12));
}

TEST_CASE("local polynomial weights reduce to differences on minimal windows") {
  const double nodes[] = {-1, 0, 1};
  const auto w = local_poly_weights(0.0, nodes, 2, 2);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(-2.0));
  CHECK(w[2] == doctest::Approx(1.0));
}

TEST_CASE("invalid configurations") {
  const auto f = spatial_profile(32, 0.1, 2, [](double x) { return x; });
  DiffConfig cfg;
  CHECK_THROWS_AS(differentiate(f, 0, 5, cfg), Error);
  CHECK_THROWS_AS(differentiate(f, 0, 0, cfg), Error);
  cfg.fd_order = 3;
  CHECK_THROWS_AS(differentiate(f, 0, 1, cfg), Error);
  DiffConfig poly;
  poly.method = DiffMethod::local_polynomial;
  poly.poly_degree = 2;
  CHECK_THROWS_AS(differentiate(f, 0, 3, poly), Error);
  poly.poly_degree = 6;
  poly.poly_window = 41;
  CHECK_THROWS_AS(differentiate(f, 0, 1, poly), Error);
  poly.poly_window = 20;
  CHECK_THROWS_AS(differentiate(f, 0, 1, poly), Error);
}

TEST_CASE("time derivative runs along the last axis") {
  // u(x, t) = x * t^2 on a 6 x 30 grid.
  const double dt = 0.05;
  std::vector<double> data(6 * 30);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 30; ++j) data[i * 30 + j] = static_cast<double>(i) * std::pow(j * dt, 2);
  const auto f = make_field({6, 30}, data, {1.0, dt});
  const auto d = differentiate(f, 1, 1, DiffConfig{});
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = d.margin; j + d.margin < 30; ++j)
      CHECK(d.field[i * 30 + j] == doctest::Approx(2.0 * static_cast<double>(i) * j * dt).epsilon(1e-9));
}

TEST_CASE("margins grow with stencil width") {
  DiffConfig cfg;
  CHECK(stencil_margin(1, cfg) == 1);
  CHECK(stencil_margin(4, cfg) == 2);
  cfg.fd_order = 4;
  CHECK(stencil_margin(2, cfg) == 2);
  cfg.step_stride = 2;
  CHECK(stencil_margin(2, cfg) == 4);
}

TEST_SUITE("property") {
  TEST_CASE("differentiation is linear") {
    const auto f = random_field({40, 7}, 1);
    const auto g = random_field({40, 7}, 2);
    std::vector<double> combo(f.size());
    for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = 2.5 * f[i] - 0.75 * g[i];
    for (auto method : {DiffMethod::finite_difference, DiffMethod::local_polynomial}) {
      DiffConfig cfg;
      cfg.method = method;
      cfg.fd_order = 4;
      cfg.poly_window = 11;
      for (int order = 1; order <= 4; ++order) {
        const auto df = differentiate(f, 0, order, cfg).field;
        const auto dg = differentiate(g, 0, order, cfg).field;
        const auto dc = differentiate(f.with_data(combo), 0, order, cfg).field;
        double scale = 0.0, worst = 0.0;
        for (std::size_t i = 0; i < combo.size(); ++i) {
          const double expect = 2.5 * df[i] - 0.75 * dg[i];
          scale = std::max(scale, std::abs(expect));
          worst = std::max(worst, std::abs(dc[i] - expect));
        }
        CHECK(worst <= 1e-12 * scale);
      }
    }
  }

  TEST_CASE("convergence rate matches the nominal order") {
    for (int fd_order : {2, 4, 6}) {
      for (int order = 1; order <= 4; ++order) {
        // Coarse enough that rounding stays far below truncation error.
        const double e1 = sin_error(32, order, fd_order);
        const double e2 = sin_error(64, order, fd_order);
        const double rate = std::log2(e1 / e2);
        CAPTURE(fd_order);
        CAPTURE(order);
        CHECK(std::abs(rate - fd_order) <= 0.2);
      }
    }
  }

  TEST_CASE("strided stencils equal differencing the decimated grid") {
    const std::size_t n = 120, s = 3;
    const double h = 0.05;
    const auto smooth = [](double x) { return std::sin(1.3 * x) + 0.2 * std::cos(0.4 * x); };
    const auto f = spatial_profile(n, h, 2, smooth);
    const auto coarse = spatial_profile(n / s, h * s, 2, smooth);
    for (int order = 1; order <= 4; ++order) {
      DiffConfig strided;
      strided.fd_order = 4;
      strided.step_stride = static_cast<int>(s);
      DiffConfig plain;
      plain.fd_order = 4;
      const auto a = differentiate(f, 0, order, strided);
      const auto b = differentiate(coarse, 0, order, plain);
      for (std::size_t i = b.margin; i + b.margin < n / s; ++i) {
        const std::size_t fine = i * s;
        if (fine < a.margin || fine + a.margin >= n) continue;
        CHECK(a.field[fine * 2] == doctest::Approx(b.field[i * 2]).epsilon(1e-10));
      }
    }
  }
}
