#include "candlib.hpp"

#include <algorithm>
#include <set>

#include "error.hpp"

namespace fdi {

std::string TermDescriptor::name() const {
  if (is_constant()) return "1";
  std::string out;
  if (u_power == 1) out = "u";
  else if (u_power > 1) out = "u^" + std::to_string(u_power);
  if (deriv_order > 0) {
    if (!out.empty()) out += '*';
    out += "u_";
    out.append(static_cast<std::size_t>(deriv_order), axis_char(*deriv_axis));
  }
  return out;
}

namespace {

[[noreturn]] void bad_term(std::string_view name, const std::string& why) {
  fail(ErrorKind::invalid_argument, "cannot parse term '" + std::string(name) + "': " + why);
}

void check_term(const TermDescriptor& t) {
  if (t.u_power < 0 || t.u_power > 3)
    fail(ErrorKind::invalid_argument, "u_power must be in 0..3");
  if (t.deriv_order < 0 || t.deriv_order > kMaxDerivativeOrder)
    fail(ErrorKind::invalid_argument, "derivative order must be in 0..4");
  if (t.deriv_order > 0 && (!t.deriv_axis || *t.deriv_axis == Axis::t))
    fail(ErrorKind::invalid_argument, "derivative terms need a spatial axis");
  if (t.deriv_order == 0 && t.deriv_axis)
    fail(ErrorKind::invalid_argument, "axis given for a term without derivative");
}

}  // namespace

TermDescriptor parse_term(std::string_view name) {
  TermDescriptor t{0, std::nullopt, 0};
  if (name == "1") return t;
  std::size_t pos = 0;
  while (pos < name.size()) {
    auto end = name.find('*', pos);
    if (end == std::string_view::npos) end = name.size();
    const auto factor = name.substr(pos, end - pos);
    if (factor == "u") {
      t.u_power += 1;
    } else if (factor.starts_with("u^")) {
      if (factor.size() != 3 || factor[2] < '1' || factor[2] > '3') bad_term(name, "bad power");
      t.u_power += factor[2] - '0';
    } else if (factor.starts_with("u_")) {
      if (t.deriv_order > 0) bad_term(name, "more than one derivative factor");
      const auto axes = factor.substr(2);
      if (axes.empty()) bad_term(name, "empty derivative");
      if (!std::all_of(axes.begin(), axes.end(), [&](char c) { return c == axes[0]; }))
        bad_term(name, "mixed derivatives are not supported");
      t.deriv_axis = parse_axis(axes[0]);
      t.deriv_order = static_cast<int>(axes.size());
    } else {
      bad_term(name, "unknown factor '" + std::string(factor) + "'");
    }
    pos = end + 1;
  }
  check_term(t);
  return t;
}

void LibrarySpec::validate() const {
  if (terms.empty()) fail(ErrorKind::invalid_argument, "library has no terms");
  if (lhs_order != 1 && lhs_order != 2)
    fail(ErrorKind::invalid_argument, "lhs order must be 1 or 2");
  std::set<TermDescriptor> seen;
  for (const auto& t : terms) {
    check_term(t);
    if (!seen.insert(t).second)
      fail(ErrorKind::invalid_argument, "duplicate library term " + t.name());
  }
}

std::vector<std::string> LibrarySpec::names() const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(t.name());
  return out;
}

std::optional<std::size_t> LibrarySpec::find(const TermDescriptor& t) const {
  auto it = std::find(terms.begin(), terms.end(), t);
  if (it == terms.end()) return std::nullopt;
  return static_cast<std::size_t>(it - terms.begin());
}

LibrarySpec standard_library(int spatial_dims) {
  LibrarySpec spec;
  auto add = [&](int p, std::optional<Axis> a, int o) { spec.terms.push_back({p, a, o}); };
  // Pure powers of u come first, then power x derivative blocks, derivative-major.
  switch (spatial_dims) {
    case 1:
      for (int p = 1; p <= 3; ++p) add(p, std::nullopt, 0);
      for (int o = 1; o <= 4; ++o)
        for (int p = 0; p <= 3; ++p) add(p, Axis::x, o);
      break;
    case 2:
      for (int p = 1; p <= 2; ++p) add(p, std::nullopt, 0);
      for (Axis a : {Axis::x, Axis::y})
        for (int o = 1; o <= 3; ++o)
          for (int p = 0; p <= 2; ++p) add(p, a, o);
      break;
    case 3:
      for (int p = 1; p <= 2; ++p) add(p, std::nullopt, 0);
      for (Axis a : {Axis::x, Axis::y, Axis::z})
        for (int o = 1; o <= 2; ++o)
          for (int p = 0; p <= 2; ++p) add(p, a, o);
      break;
    default:
      fail(ErrorKind::invalid_argument, "standard libraries exist for 1, 2 or 3 spatial dims");
  }
  return spec;
}

LibrarySpec library_from_json(const nlohmann::json& j) {
  LibrarySpec spec;
  const nlohmann::json* list = &j;
  if (j.is_object()) {
    spec.lhs_order = j.value("lhs_order", 1);
    if (!j.contains("terms")) fail(ErrorKind::invalid_argument, "library JSON lacks \"terms\"");
    list = &j.at("terms");
  }
  if (!list->is_array()) fail(ErrorKind::invalid_argument, "library terms must be an array");
  for (const auto& e : *list) {
    if (e.is_string()) {
      spec.terms.push_back(parse_term(e.get<std::string>()));
      continue;
    }
    TermDescriptor t;
    t.u_power = e.value("u_power", 0);
    t.deriv_order = e.value("order", 0);
    if (e.contains("axis") && !e.at("axis").is_null()) {
      const auto s = e.at("axis").get<std::string>();
      if (s.size() != 1) fail(ErrorKind::invalid_argument, "axis must be one letter");
      t.deriv_axis = parse_axis(s[0]);
    }
    spec.terms.push_back(t);
  }
  spec.validate();
  return spec;
}

nlohmann::json library_to_json(const LibrarySpec& spec) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : spec.terms) {
    nlohmann::json e{{"u_power", t.u_power}, {"order", t.deriv_order}};
    e["axis"] = t.deriv_axis ? nlohmann::json(std::string(1, axis_char(*t.deriv_axis)))
                             : nlohmann::json(nullptr);
    terms.push_back(e);
  }
  return {{"terms", terms}, {"lhs_order", spec.lhs_order}};
}

EvaluatedLibrary::EvaluatedLibrary(LibrarySpec spec, Field u,
                                   std::map<std::pair<std::size_t, int>, Field> derivs, Field lhs,
                                   std::vector<Margin> margins)
    : spec_(std::move(spec)),
      u_(std::move(u)),
      derivs_(std::move(derivs)),
      lhs_(std::move(lhs)),
      margins_(std::move(margins)) {}

Field EvaluatedLibrary::term(std::size_t i) const {
  const auto& t = descriptor(i);
  const auto ud = u_.data();
  std::vector<double> out(ud.size(), 1.0);
  for (int p = 0; p < t.u_power; ++p)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = p == 0 ? ud[k] : out[k] * ud[k];
  if (t.deriv_order > 0) {
    const auto axis = *u_.axis_index(*t.deriv_axis);
    const auto d = derivs_.at({axis, t.deriv_order}).data();
    if (t.u_power == 0) std::copy(d.begin(), d.end(), out.begin());
    else
      for (std::size_t k = 0; k < out.size(); ++k) out[k] *= d[k];
  }
  return u_.with_data(std::move(out));
}

namespace {

std::size_t require_axis(const Field& f, Axis a) {
  const auto idx = f.axis_index(a);
  if (!idx)
    fail(ErrorKind::invalid_argument,
         std::string("library references axis '") + axis_char(a) + "' absent from the field");
  return *idx;
}

}  // namespace

std::vector<Margin> library_margins(const Field& f, const LibrarySpec& spec, const DiffConfig& cfg) {
  std::vector<Margin> margins(f.rank());
  auto widen = [&](std::size_t axis, int order) {
    const auto m = stencil_margin(order, cfg);
    margins[axis].lo = std::max(margins[axis].lo, m);
    margins[axis].hi = std::max(margins[axis].hi, m);
  };
  for (const auto& t : spec.terms)
    if (t.deriv_order > 0) widen(require_axis(f, *t.deriv_axis), t.deriv_order);
  widen(f.time_axis(), spec.lhs_order);
  return margins;
}

EvaluatedLibrary evaluate_library(const Field& f, const LibrarySpec& spec, const DiffConfig& cfg) {
  spec.validate();
  const auto margins = library_margins(f, spec, cfg);
  std::map<std::pair<std::size_t, int>, Field> derivs;
  for (const auto& t : spec.terms) {
    if (t.deriv_order == 0) continue;
    const auto axis = require_axis(f, *t.deriv_axis);
    const auto key = std::make_pair(axis, t.deriv_order);
    if (derivs.contains(key)) continue;
    derivs.emplace(key, trim_interior(differentiate(f, axis, t.deriv_order, cfg).field, margins));
  }
  Field lhs = trim_interior(differentiate(f, f.time_axis(), spec.lhs_order, cfg).field, margins);
  Field u = trim_interior(f, margins);
  return EvaluatedLibrary(spec, std::move(u), std::move(derivs), std::move(lhs), margins);
}

}  // namespace fdi
