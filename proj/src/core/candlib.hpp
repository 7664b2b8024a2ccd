#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deriv.hpp"
#include "field.hpp"

namespace fdi {

/// One candidate term: u^u_power times the deriv_order-th derivative of u
/// along deriv_axis. deriv_order 0 means no derivative factor.
struct TermDescriptor {
  int u_power = 1;
  std::optional<Axis> deriv_axis;
  int deriv_order = 0;

  /// Canonical name, e.g. "u^2*u_xxx", "u*u_x", "u_xx", "u^3", "1".
  std::string name() const;
  bool is_constant() const noexcept { return u_power == 0 && deriv_order == 0; }

  auto operator<=>(const TermDescriptor&) const = default;
};

TermDescriptor parse_term(std::string_view name);

struct LibrarySpec {
  std::vector<TermDescriptor> terms;
  int lhs_order = 1;

  void validate() const;
  std::vector<std::string> names() const;
  /// Column position of a term, if present.
  std::optional<std::size_t> find(const TermDescriptor& t) const;
};

/// The fixed 1-D / 2-D / 3-D candidate libraries.
LibrarySpec standard_library(int spatial_dims);

/// `{"terms": [{"u_power":1,"axis":"x","order":1}, ...], "lhs_order": 1}`.
/// A bare array is accepted as the term list with lhs_order 1.
LibrarySpec library_from_json(const nlohmann::json& j);
nlohmann::json library_to_json(const LibrarySpec& spec);

/// Candidate-term fields over the common interior of the input grid.
/// Derivative factors are computed once per (axis, order) and term fields are
/// formed on request, so memory stays proportional to the distinct factors.
class EvaluatedLibrary {
 public:
  EvaluatedLibrary(LibrarySpec spec, Field u, std::map<std::pair<std::size_t, int>, Field> derivs,
                   Field lhs, std::vector<Margin> margins);

  const LibrarySpec& spec() const noexcept { return spec_; }
  std::size_t term_count() const noexcept { return spec_.terms.size(); }
  const TermDescriptor& descriptor(std::size_t i) const { return spec_.terms.at(i); }
  std::string name(std::size_t i) const { return descriptor(i).name(); }

  /// Elementwise u^p times the derivative factor of term i.
  Field term(std::size_t i) const;
  const Field& lhs() const noexcept { return lhs_; }
  const Field& u() const noexcept { return u_; }
  const std::vector<Margin>& margins() const noexcept { return margins_; }
  const std::vector<std::size_t>& dims() const noexcept { return u_.dims(); }

 private:
  LibrarySpec spec_;
  Field u_;
  std::map<std::pair<std::size_t, int>, Field> derivs_;
  Field lhs_;
  std::vector<Margin> margins_;
};

/// Per-axis trimming needed so every term and the time derivative are free of
/// one-sided stencil values.
std::vector<Margin> library_margins(const Field& f, const LibrarySpec& spec, const DiffConfig& cfg);

EvaluatedLibrary evaluate_library(const Field& f, const LibrarySpec& spec, const DiffConfig& cfg);

}  // namespace fdi
