#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "error.hpp"
#include "fft.hpp"
#include "rng.hpp"

namespace fdi {

void EquationSpec::validate() const {
  if (true_terms.empty()) fail(ErrorKind::invalid_argument, "equation has no terms");
  if (lhs_order != 1 && lhs_order != 2) fail(ErrorKind::invalid_argument, "lhs order must be 1 or 2");
  for (const auto& t : true_terms)
    if (!std::isfinite(t.coefficient)) fail(ErrorKind::invalid_argument, "non-finite coefficient");
}

std::vector<std::string> EquationSpec::support() const {
  std::vector<std::string> out;
  for (const auto& t : true_terms) out.push_back(t.term.name());
  return out;
}

void GridSpec::validate() const {
  const std::size_t n = points.size();
  if (n < 2 || n > kMaxAxes || lower.size() != n || extent.size() != n)
    fail(ErrorKind::invalid_argument, "grid needs matching per-axis lower/extent/points for 2-4 axes");
  for (std::size_t a = 0; a < n; ++a) {
    if (!(extent[a] > 0.0)) fail(ErrorKind::invalid_argument, "grid extents must be positive");
    if (points[a] < 8) fail(ErrorKind::invalid_argument, "grid axes need at least 8 points");
  }
  if (points.back() < 16) fail(ErrorKind::invalid_argument, "grid needs at least 16 output times");
  if (substeps < 1) fail(ErrorKind::invalid_argument, "substep factor must be >= 1");
}

const std::vector<std::string>& equation_names() {
  static const std::vector<std::string> names{"burgers1d", "kdv",         "ks",       "wave2d",
                                              "burgers2d", "diffusion3d", "burgers3d"};
  return names;
}

EquationSpec equation_spec(const std::string& name) {
  EquationSpec eq;
  eq.name = name;
  auto add = [&](const char* term, const char* coef_name, double c) {
    eq.true_terms.push_back({parse_term(term), c});
    eq.coefficients[coef_name] = c;
  };
  if (name == "burgers1d") {
    add("u*u_x", "advection", -1.0);
    add("u_xx", "viscosity", 0.05);
  } else if (name == "kdv") {
    add("u_x", "drift", -0.5);
    add("u*u_x", "nonlinearity", -1.5);
    add("u_xxx", "dispersion", -0.25);
  } else if (name == "ks") {
    add("u*u_x", "nonlinearity", -1.0);
    add("u_xx", "antidiffusion", -0.7);
    add("u_xxx", "dispersion", -1.0);
    add("u_xxxx", "hyperdiffusion", -1.3);
  } else if (name == "wave2d") {
    add("u_xx", "cx2", 1.0);
    add("u_yy", "cy2", 1.0);
    eq.lhs_order = 2;
  } else if (name == "burgers2d") {
    add("u*u_x", "advection_x", -1.0);
    add("u_xx", "viscosity_x", 0.01);
    add("u*u_y", "advection_y", -1.0);
    add("u_yy", "viscosity_y", 0.01);
  } else if (name == "diffusion3d") {
    add("u_xx", "dx", 1.0);
    add("u_yy", "dy", 1.5);
    add("u_zz", "dz", 2.0);
  } else if (name == "burgers3d") {
    add("u*u_x", "advection_x", -1.0);
    add("u_xx", "viscosity_x", 0.1);
    add("u*u_y", "advection_y", -1.0);
    add("u_yy", "viscosity_y", 0.1);
    add("u*u_z", "advection_z", -1.0);
    add("u_zz", "viscosity_z", 0.1);
  } else {
    fail(ErrorKind::unsupported, "unsupported equation '" + name + "'");
  }
  // Library order, so results and truth line up column by column.
  const int dims = name == "wave2d" || name == "burgers2d" ? 2 : (name.ends_with("3d") ? 3 : 1);
  const auto lib = standard_library(dims);
  std::stable_sort(eq.true_terms.begin(), eq.true_terms.end(), [&](const auto& a, const auto& b) {
    return *lib.find(a.term) < *lib.find(b.term);
  });
  return eq;
}

GridSpec default_grid(const std::string& name) {
  constexpr double pi = std::numbers::pi;
  if (name == "burgers1d") return {{-8.0, 0.0}, {16.0, 10.0}, {256, 101}, 20};
  if (name == "kdv") return {{-20.0, 0.0}, {40.0, 20.0}, {256, 201}, 20};
  if (name == "ks") return {{0.0, 0.0}, {32.0 * pi, 100.0}, {256, 201}, 20};
  if (name == "wave2d") return {{-4.0, -4.0, 0.0}, {8.0, 8.0, 4.0}, {64, 64, 81}, 10};
  if (name == "burgers2d") return {{-4.0, -4.0, 0.0}, {8.0, 8.0, 4.0}, {64, 64, 41}, 20};
  if (name == "diffusion3d") return {{-pi, -pi, -pi, 0.0}, {2 * pi, 2 * pi, 2 * pi, 0.4}, {48, 48, 48, 40}, 10};
  if (name == "burgers3d") return {{-pi, -pi, -pi, 0.0}, {2 * pi, 2 * pi, 2 * pi, 2.0}, {48, 48, 48, 40}, 10};
  fail(ErrorKind::unsupported, "unsupported equation '" + name + "'");
}

InitialCondition default_initial_condition(const std::string& name) {
  if (name == "burgers1d") {
    // exp(-(x+1)^2) minus its mean over [-8, 8]: sqrt(pi)/16.
    const double mean = std::sqrt(std::numbers::pi) / 16.0;
    return [mean](std::span<const double> x) { return std::exp(-(x[0] + 1.0) * (x[0] + 1.0)) - mean; };
  }
  if (name == "kdv")
    return [](std::span<const double> x) {
      return 1.5 * std::exp(-(x[0] + 8.0) * (x[0] + 8.0) / 4.0) +
             0.8 * std::exp(-(x[0] - 4.0) * (x[0] - 4.0) / 6.0);
    };
  if (name == "ks")
    return [](std::span<const double> x) { return std::cos(x[0] / 16.0) * (1.0 + std::sin(x[0] / 16.0)); };
  if (name == "wave2d")
    return [](std::span<const double> x) { return std::exp(-(x[0] * x[0] + x[1] * x[1])); };
  // Low amplitude keeps the 0.01 diffusion visible next to advection.
  if (name == "burgers2d")
    return [](std::span<const double> x) { return 0.3 * std::exp(-(x[0] * x[0] + x[1] * x[1])); };
  if (name == "diffusion3d")
    return [](std::span<const double> x) {
      return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 0.5);
    };
  if (name == "burgers3d")
    return [](std::span<const double> x) {
      return 2.0 * std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    };
  fail(ErrorKind::unsupported, "unsupported equation '" + name + "'");
}

namespace {

using ComplexVec = std::vector<Complex>;

/// Fourier-space view of the right-hand side: a diagonal linear part and a
/// pseudo-spectrally evaluated nonlinear part.
class SpectralRhs {
 public:
  SpectralRhs(const EquationSpec& eq, const GridSpec& grid)
      : sdims_(grid.points.begin(), grid.points.end() - 1), fft_(sdims_) {
    const std::size_t ns = sdims_.size();
    static constexpr std::array<Axis, 3> kAxes{Axis::x, Axis::y, Axis::z};
    const std::size_t spec = fft_.spectral_size();
    wavenumber_.assign(ns, std::vector<double>(spec));
    dealias_.assign(spec, 1.0);
    kmax_.assign(ns, 0.0);
    std::vector<std::size_t> idx(ns, 0);
    std::vector<std::size_t> sd = sdims_;
    sd.back() = sdims_.back() / 2 + 1;
    for (std::size_t i = 0; i < spec; ++i) {
      for (std::size_t a = 0; a < ns; ++a) {
        const auto n = static_cast<long>(sdims_[a]);
        long m = static_cast<long>(idx[a]);
        if (m > n / 2) m -= n;
        const double k = 2.0 * std::numbers::pi * static_cast<double>(m) / grid.extent[a];
        wavenumber_[a][i] = k;
        kmax_[a] = std::max(kmax_[a], std::abs(k));
        if (3 * std::abs(m) > n) dealias_[i] = 0.0;  // 2/3 rule
      }
      for (std::size_t a = ns; a-- > 0;) {
        if (++idx[a] < sd[a]) break;
        idx[a] = 0;
      }
    }
    linear_.assign(spec, Complex{});
    for (const auto& tt : eq.true_terms) {
      const auto& t = tt.term;
      const bool linear = (t.u_power == 0 && t.deriv_order > 0) || (t.u_power == 1 && t.deriv_order == 0);
      if (!linear) {
        std::size_t axis = 0;
        if (t.deriv_order > 0) axis = axis_of(*t.deriv_axis, kAxes);
        nonlinear_.push_back({t.u_power, axis, t.deriv_order, tt.coefficient});
        continue;
      }
      if (t.deriv_order == 0) {
        for (auto& l : linear_) l += tt.coefficient;
        continue;
      }
      const auto axis = axis_of(*t.deriv_axis, kAxes);
      for (std::size_t i = 0; i < spec; ++i) linear_[i] += tt.coefficient * symbol(axis, t.deriv_order, i);
    }
  }

  std::size_t spectral_size() const noexcept { return fft_.spectral_size(); }
  std::size_t real_size() const noexcept { return fft_.real_size(); }
  const ComplexVec& linear() const noexcept { return linear_; }
  bool has_nonlinear() const noexcept { return !nonlinear_.empty(); }
  double kmax(std::size_t axis) const noexcept { return kmax_[axis]; }
  std::size_t spatial_rank() const noexcept { return sdims_.size(); }

  struct NonlinearTerm {
    int power;
    std::size_t axis;
    int order;
    double coefficient;
  };
  const std::vector<NonlinearTerm>& nonlinear_terms() const noexcept { return nonlinear_; }

  void to_physical(const ComplexVec& spec, std::vector<double>& out) { fft_.inverse(spec, out); }
  void to_spectral(const std::vector<double>& phys, ComplexVec& out) { fft_.forward(phys, out); }

  /// (i k)^order along an axis; odd orders vanish at the Nyquist bin.
  Complex symbol(std::size_t axis, int order, std::size_t i) const {
    const double k = wavenumber_[axis][i];
    if (order % 2 == 1 && sdims_[axis] % 2 == 0 &&
        std::abs(std::abs(k) - kmax_nyquist(axis)) < 1e-12 * (1.0 + std::abs(k)))
      return {};
    return std::pow(Complex(0.0, k), order);
  }

  /// Nonlinear part of the right-hand side for spectral state v.
  void nonlinear(const ComplexVec& v, ComplexVec& out) {
    const std::size_t nr = fft_.real_size();
    u_.resize(nr);
    acc_.assign(nr, 0.0);
    to_physical(v, u_);
    for (const auto& t : nonlinear_) {
      if (t.order > 0) {
        work_.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) work_[i] = symbol(t.axis, t.order, i) * v[i];
        deriv_.resize(nr);
        to_physical(work_, deriv_);
      } else {
        deriv_.assign(nr, 1.0);
      }
      for (std::size_t i = 0; i < nr; ++i) {
        double p = t.coefficient;
        for (int k = 0; k < t.power; ++k) p *= u_[i];
        acc_[i] += p * deriv_[i];
      }
    }
    out.resize(v.size());
    to_spectral(acc_, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= dealias_[i];
  }

 private:
  template <typename Axes>
  static std::size_t axis_of(Axis a, const Axes& axes) {
    return static_cast<std::size_t>(std::find(axes.begin(), axes.end(), a) - axes.begin());
  }
  double kmax_nyquist(std::size_t axis) const { return kmax_[axis]; }

  std::vector<std::size_t> sdims_;
  RealFft fft_;
  std::vector<std::vector<double>> wavenumber_;
  std::vector<double> dealias_;
  std::vector<double> kmax_;
  ComplexVec linear_;
  std::vector<NonlinearTerm> nonlinear_;
  std::vector<double> u_, acc_, deriv_;
  ComplexVec work_;
};

/// phi-function weights for ETDRK4 via contour averaging, stable for small hL.
struct EtdCoefficients {
  ComplexVec e, e2, q, f1, f2, f3;
};

EtdCoefficients etd_coefficients(const ComplexVec& linear, double h) {
  constexpr int kContour = 32;
  const std::size_t n = linear.size();
  EtdCoefficients c;
  c.e.resize(n);
  c.e2.resize(n);
  c.q.resize(n);
  c.f1.resize(n);
  c.f2.resize(n);
  c.f3.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex hl = h * linear[i];
    c.e[i] = std::exp(hl);
    c.e2[i] = std::exp(hl / 2.0);
    Complex q{}, f1{}, f2{}, f3{};
    for (int j = 0; j < kContour; ++j) {
      const Complex r = std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / kContour);
      const Complex z = hl + r;
      const Complex ez = std::exp(z);
      const Complex z3 = z * z * z;
      q += (std::exp(z / 2.0) - 1.0) / z;
      f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      f2 += (2.0 + z + ez * (-2.0 + z)) / z3;
      f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    c.q[i] = h * q / static_cast<double>(kContour);
    c.f1[i] = h * f1 / static_cast<double>(kContour);
    c.f2[i] = h * f2 / static_cast<double>(kContour);
    c.f3[i] = h * f3 / static_cast<double>(kContour);
  }
  return c;
}

void etdrk4_step(SpectralRhs& rhs, const EtdCoefficients& c, ComplexVec& v, ComplexVec& nv,
                 ComplexVec& a, ComplexVec& na, ComplexVec& b, ComplexVec& nb, ComplexVec& cc,
                 ComplexVec& nc) {
  const std::size_t n = v.size();
  rhs.nonlinear(v, nv);
  a.resize(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = c.e2[i] * v[i] + c.q[i] * nv[i];
  rhs.nonlinear(a, na);
  b.resize(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = c.e2[i] * v[i] + c.q[i] * na[i];
  rhs.nonlinear(b, nb);
  cc.resize(n);
  for (std::size_t i = 0; i < n; ++i) cc[i] = c.e2[i] * a[i] + c.q[i] * (2.0 * nb[i] - nv[i]);
  rhs.nonlinear(cc, nc);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = c.e[i] * v[i] + nv[i] * c.f1[i] + 2.0 * (na[i] + nb[i]) * c.f2[i] + nc[i] * c.f3[i];
}

const char* spatial_name(std::size_t a) {
  static constexpr const char* names[] = {"x", "y", "z"};
  return names[a];
}

/// Explicit-part stability: the RK-type stages must keep dt * rate inside the
/// RK4 stability region along the imaginary axis (|z| < 2.8).
void check_stability(const SpectralRhs& rhs, const EquationSpec& eq, double dt, double umax) {
  constexpr double kLimit = 2.5;
  std::vector<double> rate(rhs.spatial_rank(), 0.0);
  if (eq.lhs_order == 2) {
    // Oscillation frequency of the fastest mode, attributed per axis.
    double omega2 = 0.0;
    for (const auto& tt : eq.true_terms) {
      if (tt.term.deriv_order != 2 || tt.term.u_power != 0) continue;
      const auto axis = static_cast<std::size_t>(*tt.term.deriv_axis);
      const double contrib = std::abs(tt.coefficient) * rhs.kmax(axis) * rhs.kmax(axis);
      omega2 += contrib;
      rate[axis] += contrib;
    }
    const double omega = std::sqrt(omega2);
    if (dt * omega > kLimit) {
      const auto worst = static_cast<std::size_t>(std::max_element(rate.begin(), rate.end()) - rate.begin());
      fail(ErrorKind::unstable, std::string("time step too large for wave speed along axis ") +
                                    spatial_name(worst) + "; increase the substep factor");
    }
    return;
  }
  for (const auto& t : rhs.nonlinear_terms()) {
    const double amp = std::pow(umax, std::max(t.power - (t.order == 0 ? 1 : 0), 0));
    rate[t.axis] += std::abs(t.coefficient) * amp * std::pow(rhs.kmax(t.axis), t.order);
  }
  double total = 0.0;
  for (double r : rate) total += r;
  if (dt * total > kLimit) {
    const auto worst = static_cast<std::size_t>(std::max_element(rate.begin(), rate.end()) - rate.begin());
    fail(ErrorKind::unstable, std::string("explicit step violates the stability bound along axis ") +
                                  spatial_name(worst) + "; increase the substep factor");
  }
}

}  // namespace

Field solve_reference(const EquationSpec& eq, const GridSpec& grid) {
  return solve_reference(eq, grid, default_initial_condition(eq.name));
}

Field solve_reference(const EquationSpec& eq, const GridSpec& grid, const InitialCondition& u0) {
  eq.validate();
  grid.validate();
  static constexpr std::array<Axis, 3> kAxes{Axis::x, Axis::y, Axis::z};
  const std::size_t ns = grid.spatial_rank();
  if (ns < 1 || ns > 3) fail(ErrorKind::invalid_argument, "grid needs 1 to 3 spatial axes");
  for (const auto& tt : eq.true_terms)
    if (tt.term.deriv_order > 0 && static_cast<std::size_t>(*tt.term.deriv_axis) >= ns)
      fail(ErrorKind::invalid_argument, "equation uses an axis the grid lacks");

  SpectralRhs rhs(eq, grid);
  const std::size_t nr = rhs.real_size();
  const std::size_t nt = grid.points.back();
  const double dt_out = grid.extent.back() / static_cast<double>(nt - 1);
  const double dt = dt_out / grid.substeps;

  // Initial samples.
  std::vector<double> u(nr);
  std::vector<double> coords(ns);
  std::vector<std::size_t> idx(ns, 0);
  double umax = 0.0;
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t a = 0; a < ns; ++a)
      coords[a] = grid.lower[a] + grid.extent[a] * static_cast<double>(idx[a]) / static_cast<double>(grid.points[a]);
    u[i] = u0(coords);
    umax = std::max(umax, std::abs(u[i]));
    for (std::size_t a = ns; a-- > 0;) {
      if (++idx[a] < grid.points[a]) break;
      idx[a] = 0;
    }
  }
  check_stability(rhs, eq, dt, umax);

  std::vector<double> out(nr * nt);
  auto record = [&](std::size_t j, const std::vector<double>& snap) {
    for (std::size_t i = 0; i < nr; ++i) out[i * nt + j] = snap[i];
  };
  record(0, u);

  ComplexVec v(rhs.spectral_size());
  rhs.to_spectral(u, v);

  if (eq.lhs_order == 1) {
    const auto coef = etd_coefficients(rhs.linear(), dt);
    ComplexVec nv, a, na, b, nb, c, nc;
    for (std::size_t j = 1; j < nt; ++j) {
      for (int s = 0; s < grid.substeps; ++s) etdrk4_step(rhs, coef, v, nv, a, na, b, nb, c, nc);
      rhs.to_physical(v, u);
      record(j, u);
    }
  } else {
    // u_tt = L u + N(u), integrated as (u, w = u_t) with RK4; w starts at rest.
    const auto& lin = rhs.linear();
    const std::size_t n = v.size();
    ComplexVec w(n, Complex{}), nl, ku[4], kw[4], vt(n), wt(n);
    auto accel = [&](const ComplexVec& state, ComplexVec& res) {
      res.resize(n);
      if (rhs.has_nonlinear()) rhs.nonlinear(state, nl);
      for (std::size_t i = 0; i < n; ++i) res[i] = lin[i] * state[i] + (rhs.has_nonlinear() ? nl[i] : Complex{});
    };
    for (std::size_t j = 1; j < nt; ++j) {
      for (int s = 0; s < grid.substeps; ++s) {
        ku[0] = w;
        accel(v, kw[0]);
        for (int st = 1; st < 4; ++st) {
          const double f = st == 3 ? dt : dt / 2.0;
          for (std::size_t i = 0; i < n; ++i) {
            vt[i] = v[i] + f * ku[st - 1][i];
            wt[i] = w[i] + f * kw[st - 1][i];
          }
          ku[st] = wt;
          accel(vt, kw[st]);
        }
        for (std::size_t i = 0; i < n; ++i) {
          v[i] += dt / 6.0 * (ku[0][i] + 2.0 * ku[1][i] + 2.0 * ku[2][i] + ku[3][i]);
          w[i] += dt / 6.0 * (kw[0][i] + 2.0 * kw[1][i] + 2.0 * kw[2][i] + kw[3][i]);
        }
      }
      rhs.to_physical(v, u);
      record(j, u);
    }
  }
  const double bound = 1e6 * (umax + 1.0);
  for (double x : out)
    if (!std::isfinite(x) || std::abs(x) > bound)
      fail(ErrorKind::unstable, "solution blew up; increase the substep factor");

  std::vector<std::size_t> dims(grid.points.begin(), grid.points.end());
  std::vector<double> spacings(ns + 1);
  std::vector<Axis> labels(ns + 1, Axis::t);
  for (std::size_t a = 0; a < ns; ++a) {
    spacings[a] = grid.extent[a] / static_cast<double>(grid.points[a]);
    labels[a] = kAxes[a];
  }
  spacings[ns] = dt_out;
  return Field(std::move(dims), std::move(spacings), std::move(labels), std::move(out));
}

Field inject_noise(const Field& f, const NoiseSpec& noise) {
  if (!(noise.alpha >= 0.0) || !std::isfinite(noise.alpha))
    fail(ErrorKind::invalid_argument, "noise level must be a finite non-negative number");
  if (noise.alpha == 0.0) return f;
  const double scale = noise.alpha * field_stats(f).std;
  const CounterRng rng(noise.seed);
  std::vector<double> out(f.data().begin(), f.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * rng.normal(i);
  return f.with_data(std::move(out));
}

nlohmann::json equation_to_json(const EquationSpec& eq) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : eq.true_terms) terms.push_back({{"term", t.term.name()}, {"coefficient", t.coefficient}});
  return {{"name", eq.name}, {"coefficients", eq.coefficients}, {"true_terms", terms}, {"lhs_order", eq.lhs_order}};
}

EquationSpec equation_from_json(const nlohmann::json& j) {
  EquationSpec eq;
  eq.name = j.at("name").get<std::string>();
  eq.lhs_order = j.value("lhs_order", 1);
  if (j.contains("coefficients")) eq.coefficients = j.at("coefficients").get<std::map<std::string, double>>();
  for (const auto& t : j.at("true_terms"))
    eq.true_terms.push_back({parse_term(t.at("term").get<std::string>()), t.at("coefficient").get<double>()});
  eq.validate();
  return eq;
}

nlohmann::json grid_to_json(const GridSpec& g) {
  return {{"lower", g.lower}, {"extent", g.extent}, {"points", g.points}, {"substeps", g.substeps}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g;
  g.lower = j.at("lower").get<std::vector<double>>();
  g.extent = j.at("extent").get<std::vector<double>>();
  g.points = j.at("points").get<std::vector<std::size_t>>();
  g.substeps = j.value("substeps", 1);
  g.validate();
  return g;
}

}  // namespace fdi
