#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "candlib.hpp"
#include "error.hpp"
#include "synth.hpp"
#include "support.hpp"

using namespace fdi;
using namespace fdi::testing;

TEST_CASE("standard 1-D library") {
  const auto lib = standard_library(1);
  REQUIRE(lib.terms.size() == 19);
  const auto names = lib.names();
  CHECK(names[0] == "u");
  CHECK(names[1] == "u^2");
  CHECK(names[2] == "u^3");
  CHECK(names[3] == "u_x");
  CHECK(names[4] == "u*u_x");
  CHECK(names[18] == "u^3*u_xxxx");
  CHECK(lib.lhs_order == 1);
  for (const auto& t : lib.terms) CHECK_FALSE(t.is_constant());
}

TEST_CASE("standard 2-D library") {
  const auto lib = standard_library(2);
  REQUIRE(lib.terms.size() == 20);
  const auto names = lib.names();
  CHECK(std::find(names.begin(), names.end(), "u^2*u_yyy") != names.end());
  CHECK(std::find(names.begin(), names.end(), "u^3") == names.end());
}

TEST_CASE("standard 3-D library stops at second derivatives") {
  const auto lib = standard_library(3);
  REQUIRE(lib.terms.size() == 20);
  for (const auto& t : lib.terms) CHECK(t.deriv_order <= 2);
  const auto names = lib.names();
  CHECK(std::find(names.begin(), names.end(), "u^2*u_zz") != names.end());
  CHECK_THROWS_AS(standard_library(4), Error);
}

TEST_CASE("term names parse back to the same descriptor") {
  for (int dims = 1; dims <= 3; ++dims)
    for (const auto& t : standard_library(dims).terms) CHECK(parse_term(t.name()) == t);
  CHECK(parse_term("1").is_constant());
  CHECK(parse_term("u^2*u_xxx") == TermDescriptor{2, Axis::x, 3});
  CHECK_THROWS_AS(parse_term("u_xy"), Error);
  CHECK_THROWS_AS(parse_term("u^9"), Error);
  CHECK_THROWS_AS(parse_term("u_xxxxx"), Error);
}

TEST_CASE("library JSON forms") {
  const auto spec = standard_library(2);
  const auto back = library_from_json(library_to_json(spec));
  CHECK(back.terms == spec.terms);
  CHECK(back.lhs_order == spec.lhs_order);

  const auto list = nlohmann::json::parse(R"([{"u_power":1,"axis":"x","order":1},{"u_power":0,"axis":"x","order":2}])");
  const auto a = library_from_json(list);
  CHECK(a.names() == std::vector<std::string>{"u*u_x", "u_xx"});
  CHECK(a.lhs_order == 1);

  const auto obj = nlohmann::json::parse(R"({"terms":["u_xx","u_yy"],"lhs_order":2})");
  const auto b = library_from_json(obj);
  CHECK(b.names() == std::vector<std::string>{"u_xx", "u_yy"});
  CHECK(b.lhs_order == 2);

  const auto with_constant = nlohmann::json::parse(R"(["1","u_x"])");
  CHECK(library_from_json(with_constant).terms.front().is_constant());

  CHECK_THROWS_AS(library_from_json(nlohmann::json::parse(R"(["u_x","u_x"])")), Error);
  CHECK_THROWS_AS(library_from_json(nlohmann::json::parse(R"({"terms":["u_x"],"lhs_order":3})")), Error);
}

TEST_CASE("constant field: derivative terms vanish, powers are one") {
  const auto f = make_field({20, 20}, std::vector<double>(400, 1.0), {0.1, 0.1});
  const auto lib = evaluate_library(f, standard_library(1), DiffConfig{});
  for (std::size_t i = 0; i < lib.term_count(); ++i) {
    const auto t = lib.term(i);
    const double expect = lib.descriptor(i).deriv_order == 0 ? 1.0 : 0.0;
    for (double v : t.data()) CHECK(std::abs(v - expect) <= 1e-9);
  }
  for (double v : lib.lhs().data()) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("u = x gives u*u_x equal to u") {
  const auto f = spatial_profile(30, 0.2, 12, [](double x) { return x; }, -3.0);
  LibrarySpec spec;
  spec.terms = {parse_term("u"), parse_term("u*u_x")};
  const auto lib = evaluate_library(f, spec, DiffConfig{});
  const auto u = lib.term(0);
  const auto uux = lib.term(1);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(uux[i] == doctest::Approx(u[i]).epsilon(1e-12));
}

TEST_CASE("product terms equal products of independently computed factors") {
  const auto f = random_field({32, 32}, 4);
  LibrarySpec spec;
  spec.terms = {parse_term("u^2*u_xx")};
  DiffConfig cfg;
  const auto lib = evaluate_library(f, spec, cfg);
  const auto margins = lib.margins();
  const auto uxx = trim_interior(differentiate(f, 0, 2, cfg).field, margins);
  const auto u = trim_interior(f, margins);
  const auto term = lib.term(0);
  REQUIRE(term.dims() == u.dims());
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(term[i] == u[i] * u[i] * uxx[i]);
}

TEST_CASE("margins cover the widest stencil") {
  const auto f = random_field({40, 30}, 1);
  DiffConfig cfg;
  cfg.fd_order = 4;
  const auto m = library_margins(f, standard_library(1), cfg);
  CHECK(m[0].lo == stencil_margin(4, cfg));
  CHECK(m[1].lo == stencil_margin(1, cfg));
  const auto lib = evaluate_library(f, standard_library(1), cfg);
  CHECK(lib.dims() == std::vector<std::size_t>{40 - 2 * m[0].lo, 30 - 2 * m[1].lo});
  CHECK(lib.lhs().dims() == lib.dims());
}

TEST_CASE("a term on a missing axis is rejected") {
  const auto f = random_field({16, 16}, 1);
  LibrarySpec spec;
  spec.terms = {parse_term("u_yy")};
  CHECK_THROWS_AS(evaluate_library(f, spec, DiffConfig{}), Error);
}

TEST_CASE("evaluation order does not change values") {
  const auto f = random_field({24, 20}, 8);
  LibrarySpec a;
  a.terms = {parse_term("u*u_x"), parse_term("u_xxx"), parse_term("u^2")};
  LibrarySpec b;
  b.terms = {a.terms[2], a.terms[0], a.terms[1]};
  const auto la = evaluate_library(f, a, DiffConfig{});
  const auto lb = evaluate_library(f, b, DiffConfig{});
  CHECK(la.term(0) == lb.term(1));
  CHECK(la.term(1) == lb.term(2));
  CHECK(la.term(2) == lb.term(0));
}

TEST_CASE("clean burgers satisfies its equation on the library grid") {
  const auto eq = equation_spec("burgers1d");
  const auto f = solve_reference(eq, default_grid("burgers1d"));
  DiffConfig cfg;
  cfg.fd_order = 4;
  const auto lib = evaluate_library(f, standard_library(1), cfg);
  std::vector<double> model(lib.lhs().size(), 0.0);
  for (const auto& t : eq.true_terms) {
    const auto col = lib.term(*lib.spec().find(t.term));
    for (std::size_t i = 0; i < model.size(); ++i) model[i] += t.coefficient * col[i];
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    num += std::pow(lib.lhs()[i] - model[i], 2);
    den += std::pow(lib.lhs()[i], 2);
  }
  CHECK(std::sqrt(num / den) <= 1e-2);
}
