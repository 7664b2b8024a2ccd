// End-to-end identification: configuration, system assembly per domain,
// and selection.

#include <algorithm>
#include <string>
#include <utility>

#include "error.hpp"
#include "ident.hpp"

namespace fdi {

namespace {

nlohmann::json diff_to_json(const DiffConfig& d) {
  return {{"method", to_string(d.method)},
          {"fd_order", d.fd_order},
          {"poly_degree", d.poly_degree},
          {"poly_window", d.poly_window},
          {"stride", d.step_stride}};
}

DiffConfig diff_from_json(const nlohmann::json& j, DiffConfig d) {
  if (j.contains("method")) d.method = parse_diff_method(j.at("method").get<std::string>());
  d.fd_order = j.value("fd_order", d.fd_order);
  d.poly_degree = j.value("poly_degree", d.poly_degree);
  d.poly_window = j.value("poly_window", d.poly_window);
  d.step_stride = j.value("stride", d.step_stride);
  return d;
}

nlohmann::json cutoff_json(const std::optional<CutoffSpec>& c) {
  return c ? nlohmann::json(c->modes) : nlohmann::json(nullptr);
}

std::optional<CutoffSpec> cutoff_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return CutoffSpec{j.at(key).get<std::vector<std::size_t>>()};
}

SelectionPolicy::Mode parse_policy_mode(const std::string& s) {
  if (s == "gap") return SelectionPolicy::Mode::gap;
  if (s == "fixed_k") return SelectionPolicy::Mode::fixed_k;
  if (s == "threshold") return SelectionPolicy::Mode::threshold;
  fail(ErrorKind::invalid_argument, "unknown selection policy '" + s + "'");
}

/// Runs `fn`, tagging any toolkit error with the pipeline stage.
template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.kind(), std::string(stage) + ": " + e.what(), stage);
  }
}

}  // namespace

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j{{"diff", diff_to_json(diff)},
                   {"cutoff", cutoff_json(cutoff)},
                   {"domain", to_string(domain)},
                   {"selector", to_string(selector)},
                   {"policy", {{"mode", to_string(policy.mode)}, {"k", policy.k}, {"min_q", policy.min_q}}},
                   {"sample_stride", sample_stride},
                   {"lowpass_cutoff", cutoff_json(lowpass_cutoff)},
                   {"normalize", normalize},
                   {"ridge", {{"lambda", ridge.lambda}, {"tol", ridge.tol}, {"max_iter", ridge.max_iter}}}};
  j["library"] = library ? library_to_json(*library) : nlohmann::json(nullptr);
  j["stlm"] = {{"final_k", stlm.final_k ? nlohmann::json(*stlm.final_k) : nlohmann::json(nullptr)},
               {"threshold", stlm.threshold ? nlohmann::json(*stlm.threshold) : nlohmann::json(nullptr)}};
  nlohmann::json known = nlohmann::json::array();
  for (const auto& t : known_terms) known.push_back(t.name());
  j["known_terms"] = known;
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("library") && !j.at("library").is_null()) c.library = library_from_json(j.at("library"));
  if (j.contains("diff")) c.diff = diff_from_json(j.at("diff"), c.diff);
  c.cutoff = cutoff_from(j, "cutoff");
  c.lowpass_cutoff = cutoff_from(j, "lowpass_cutoff");
  if (j.contains("domain")) c.domain = parse_domain(j.at("domain").get<std::string>());
  if (j.contains("selector")) c.selector = parse_selector(j.at("selector").get<std::string>());
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    if (p.contains("mode")) c.policy.mode = parse_policy_mode(p.at("mode").get<std::string>());
    c.policy.k = p.value("k", c.policy.k);
    c.policy.min_q = p.value("min_q", c.policy.min_q);
  }
  if (j.contains("stlm")) {
    const auto& s = j.at("stlm");
    c.stlm = {};
    if (s.contains("final_k") && !s.at("final_k").is_null()) c.stlm.final_k = s.at("final_k").get<std::size_t>();
    if (s.contains("threshold") && !s.at("threshold").is_null()) c.stlm.threshold = s.at("threshold").get<double>();
  }
  if (j.contains("ridge")) {
    const auto& r = j.at("ridge");
    c.ridge.lambda = r.value("lambda", c.ridge.lambda);
    c.ridge.tol = r.value("tol", c.ridge.tol);
    c.ridge.max_iter = r.value("max_iter", c.ridge.max_iter);
  }
  if (j.contains("known_terms"))
    for (const auto& t : j.at("known_terms")) c.known_terms.push_back(parse_term(t.get<std::string>()));
  c.sample_stride = j.value("sample_stride", c.sample_stride);
  c.normalize = j.value("normalize", c.normalize);
  return c;
}

DiffConfig default_diff(std::size_t spatial_dims, bool noisy) {
  DiffConfig d;
  d.fd_order = 4;
  if (spatial_dims == 1 && noisy) {
    d.method = DiffMethod::local_polynomial;
    d.poly_degree = 6;
    d.poly_window = 21;
  }
  if (spatial_dims == 3) d.step_stride = 2;
  return d;
}

PipelineConfig default_pipeline(std::size_t spatial_dims, bool noisy) {
  PipelineConfig c;
  c.diff = default_diff(spatial_dims, noisy);
  return c;
}

namespace {

LibrarySpec resolve_library(const Field& f, const PipelineConfig& cfg) {
  if (cfg.library) return *cfg.library;
  return standard_library(static_cast<int>(f.spatial_rank()));
}

}  // namespace

RealSystem assemble_system(const Field& f, const PipelineConfig& cfg) {
  const LibrarySpec spec = resolve_library(f, cfg);
  switch (cfg.domain) {
    case Domain::freq: {
      const auto lib = staged("library", [&] { return evaluate_library(f, spec, cfg.diff); });
      return staged("assembly", [&] {
        const CutoffSpec cut = cfg.cutoff ? *cfg.cutoff : default_cutoff(f.rank());
        return assemble_freq_system(lib, cut, cfg.normalize).stacked();
      });
    }
    case Domain::timespace: {
      const auto lib = staged("library", [&] { return evaluate_library(f, spec, cfg.diff); });
      return staged("assembly",
                    [&] { return assemble_timespace_system(lib, cfg.sample_stride, cfg.normalize); });
    }
    case Domain::lowpass_then_timespace: {
      const Field filtered = staged("lowpass", [&] {
        const CutoffSpec cut = cfg.lowpass_cutoff ? *cfg.lowpass_cutoff : default_cutoff(f.rank());
        return lowpass_filter(f, cut);
      });
      const auto lib = staged("library", [&] { return evaluate_library(filtered, spec, cfg.diff); });
      return staged("assembly",
                    [&] { return assemble_timespace_system(lib, cfg.sample_stride, cfg.normalize); });
    }
  }
  fail(ErrorKind::invalid_argument, "unknown domain");
}

IdentResult identify_system(const RealSystem& sys, const PipelineConfig& cfg, int lhs_order) {
  IdentResult r;
  switch (cfg.selector) {
    case Selector::csr: {
      auto rates = staged("selection", [&] { return support_rates(sys); });
      r.selected = staged("selection", [&] { return select_terms(rates, cfg.policy); });
      r.rates = std::move(rates);
      r.library = sys.column_names;
      break;
    }
    case Selector::stlm:
      r = staged("selection", [&] { return stlm(sys, cfg.stlm); });
      break;
    case Selector::st_ridge:
      r = staged("selection", [&] { return st_ridge(sys, cfg.ridge); });
      break;
    case Selector::known: {
      if (cfg.known_terms.empty())
        throw Error(ErrorKind::invalid_argument, "selection: known selector needs terms", "selection");
      r.library = sys.column_names;
      for (const auto& t : cfg.known_terms) {
        const auto name = t.name();
        auto it = std::find(r.library.begin(), r.library.end(), name);
        if (it == r.library.end())
          throw Error(ErrorKind::invalid_argument, "selection: term " + name + " not in library",
                      "selection");
        r.selected.push_back(static_cast<std::size_t>(it - r.library.begin()));
      }
      std::sort(r.selected.begin(), r.selected.end());
      break;
    }
  }
  r.method = cfg.selector;
  r.domain = cfg.domain;
  r.lhs_order = lhs_order;
  if (cfg.selector == Selector::csr || cfg.selector == Selector::known)
    r.coefficients = staged("fit", [&] { return fit_selected(sys, r.selected); });
  r.config = cfg.to_json();
  return r;
}

IdentResult identify(const Field& f, const PipelineConfig& cfg) {
  const LibrarySpec spec = staged("config", [&] {
    auto s = resolve_library(f, cfg);
    s.validate();
    return s;
  });
  PipelineConfig effective = cfg;
  effective.library = spec;
  if (!effective.cutoff && cfg.domain == Domain::freq) effective.cutoff = default_cutoff(f.rank());
  if (!effective.lowpass_cutoff && cfg.domain == Domain::lowpass_then_timespace)
    effective.lowpass_cutoff = default_cutoff(f.rank());
  const RealSystem sys = assemble_system(f, effective);
  auto r = identify_system(sys, effective, spec.lhs_order);
  if (cfg.domain == Domain::freq) {
    const std::size_t modes = retained_modes(*effective.cutoff).size();
    if (modes < 3 * spec.terms.size())
      r.notes.push_back("only " + std::to_string(modes) + " retained modes for " +
                        std::to_string(spec.terms.size()) + " terms; at least three per term advised");
  }
  return r;
}

}  // namespace fdi
