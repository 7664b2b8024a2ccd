// extern "C" surface over the C++ core. Exceptions stop here and become
// status codes plus a thread-local message.

#include "fdi/fdi.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include <json.hpp>

#include "bench.hpp"
#include "error.hpp"
#include "field.hpp"
#include "freqsys.hpp"
#include "ident.hpp"
#include "synth.hpp"

struct fdi_field {
  fdi::Field field;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

fdi_status status_of(fdi::ErrorKind k) {
  switch (k) {
    case fdi::ErrorKind::invalid_argument: return FDI_ERR_INVALID_ARGUMENT;
    case fdi::ErrorKind::format: return FDI_ERR_FORMAT;
    case fdi::ErrorKind::degenerate_grid: return FDI_ERR_DEGENERATE_GRID;
    case fdi::ErrorKind::unstable: return FDI_ERR_UNSTABLE;
    case fdi::ErrorKind::unsupported: return FDI_ERR_UNSUPPORTED;
    case fdi::ErrorKind::degenerate_system: return FDI_ERR_DEGENERATE_SYSTEM;
    case fdi::ErrorKind::io: return FDI_ERR_IO;
  }
  return FDI_ERR_INTERNAL;
}

template <typename Fn>
fdi_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return FDI_OK;
  } catch (const fdi::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = std::string("bad JSON: ") + e.what();
    return FDI_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FDI_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FDI_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return FDI_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) fdi::fail(fdi::ErrorKind::invalid_argument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_or_empty(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  if (!j.is_object()) fdi::fail(fdi::ErrorKind::invalid_argument, "expected a JSON object");
  return j;
}

/// Defaults for the rank, overlaid with user members. "library" may be a
/// standard library name ("1d", "2d", "3d"); "lhs_order" applies to whichever
/// library results.
fdi::PipelineConfig resolve_config(std::size_t spatial_dims, bool noisy, json overlay) {
  std::optional<int> lhs_order;
  if (overlay.contains("lhs_order")) {
    lhs_order = overlay.at("lhs_order").get<int>();
    overlay.erase("lhs_order");
  }
  if (overlay.contains("library") && overlay.at("library").is_string()) {
    const auto name = overlay.at("library").get<std::string>();
    if (name != "1d" && name != "2d" && name != "3d")
      fdi::fail(fdi::ErrorKind::invalid_argument, "library must be 1d, 2d, 3d or a JSON spec");
    overlay["library"] = fdi::library_to_json(fdi::standard_library(name[0] - '0'));
  }
  json base = fdi::default_pipeline(spatial_dims, noisy).to_json();
  base.merge_patch(overlay);
  fdi::PipelineConfig cfg = fdi::PipelineConfig::from_json(base);
  if (lhs_order) {
    if (!cfg.library) cfg.library = fdi::standard_library(static_cast<int>(spatial_dims));
    cfg.library->lhs_order = *lhs_order;
    cfg.library->validate();
  }
  return cfg;
}

json sidecar_json(const fdi::EquationSpec& eq, const fdi::GridSpec& grid) {
  return {{"catalog_version", fdi::kCatalogVersion},
          {"equation", fdi::equation_to_json(eq)},
          {"grid", fdi::grid_to_json(grid)},
          {"noise", nullptr}};
}

json read_sidecar(const std::filesystem::path& bundle) {
  const auto path = fdi::sidecar_path(bundle);
  std::ifstream in(path);
  if (!in) return json();
  return json::parse(in);
}

/// Clean reference field and truth for a benchmark run.
struct BenchInput {
  fdi::Field clean;
  fdi::EquationSpec truth;
  json echo;  // resolved options
};

BenchInput bench_input(json& opts) {
  std::optional<fdi::EquationSpec> eq;
  if (opts.contains("equation")) {
    const auto& e = opts.at("equation");
    eq = e.is_string() ? fdi::equation_spec(e.get<std::string>()) : fdi::equation_from_json(e);
  }
  if (opts.contains("input")) {
    const std::string path = opts.at("input").get<std::string>();
    fdi::Field f = fdi::read_field(path);
    if (!eq) {
      const json side = read_sidecar(path);
      if (side.is_null() || !side.contains("equation"))
        fdi::fail(fdi::ErrorKind::invalid_argument, "no equation given and no sidecar next to " + path);
      eq = fdi::equation_from_json(side.at("equation"));
    }
    opts["equation"] = fdi::equation_to_json(*eq);
    return {std::move(f), *eq, opts};
  }
  if (!eq) fdi::fail(fdi::ErrorKind::invalid_argument, "options need \"equation\" or \"input\"");
  const fdi::GridSpec grid =
      opts.contains("grid") ? fdi::grid_from_json(opts.at("grid")) : fdi::default_grid(eq->name);
  opts["grid"] = fdi::grid_to_json(grid);
  opts["catalog_version"] = fdi::kCatalogVersion;
  fdi::Field f = fdi::solve_reference(*eq, grid);
  opts["equation"] = fdi::equation_to_json(*eq);
  return {std::move(f), *eq, opts};
}

std::vector<double> alphas_of(const json& opts) {
  if (!opts.contains("alphas")) fdi::fail(fdi::ErrorKind::invalid_argument, "options need \"alphas\"");
  return opts.at("alphas").get<std::vector<double>>();
}

fdi::ConfigForAlpha config_for(const fdi::Field& f, const json& opts) {
  const json overlay = opts.value("config", json::object());
  const std::size_t dims = f.spatial_rank();
  // Resolve eagerly so a bad overlay fails before any trial runs.
  resolve_config(dims, false, overlay);
  return [dims, overlay](double alpha) { return resolve_config(dims, alpha > 0.0, overlay); };
}

fdi::SweepOptions sweep_options(const json& opts) {
  fdi::SweepOptions s;
  s.alphas = alphas_of(opts);
  s.trials = opts.value("trials", std::size_t{10});
  s.seed_base = opts.value("seed", std::uint64_t{0});
  s.jobs = opts.value("jobs", std::size_t{1});
  if (opts.contains("journal")) s.journal = opts.at("journal").get<std::string>();
  return s;
}

json effective_configs(const fdi::ConfigForAlpha& cfg) {
  return {{"clean", cfg(0.0).to_json()}, {"noisy", cfg(1.0).to_json()}};
}

}  // namespace

extern "C" {

const char* fdi_version(void) { return "1.0.0"; }

const char* fdi_status_string(fdi_status status) {
  switch (status) {
    case FDI_OK: return "ok";
    case FDI_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FDI_ERR_FORMAT: return "format error";
    case FDI_ERR_DEGENERATE_GRID: return "degenerate grid";
    case FDI_ERR_UNSTABLE: return "unstable configuration";
    case FDI_ERR_UNSUPPORTED: return "unsupported";
    case FDI_ERR_DEGENERATE_SYSTEM: return "degenerate system";
    case FDI_ERR_IO: return "i/o error";
    case FDI_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fdi_last_error(void) { return g_last_error.c_str(); }

void fdi_string_free(char* s) { std::free(s); }

fdi_status fdi_field_create(size_t rank, const size_t* dims, const double* spacings, const char* labels,
                            const double* data, fdi_field** out) {
  return guarded([&] {
    require(dims, "dims");
    require(spacings, "spacings");
    require(labels, "labels");
    require(out, "out");
    *out = nullptr;
    std::vector<std::size_t> d(dims, dims + rank);
    std::vector<fdi::Axis> l;
    for (std::size_t i = 0; i < rank; ++i) l.push_back(fdi::parse_axis(labels[i]));
    std::size_t n = rank ? 1 : 0;
    for (auto v : d) n *= v;
    if (n && !data) fdi::fail(fdi::ErrorKind::invalid_argument, "data is null");
    std::vector<double> samples(data, data + n);
    *out = new fdi_field{fdi::Field(std::move(d), std::vector<double>(spacings, spacings + rank), std::move(l),
                                    std::move(samples))};
  });
}

void fdi_field_free(fdi_field* f) { delete f; }

fdi_status fdi_field_read(const char* path, fdi_field** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new fdi_field{fdi::read_field(path)};
  });
}

fdi_status fdi_field_write(const fdi_field* f, const char* path) {
  return guarded([&] {
    require(f, "field");
    require(path, "path");
    fdi::write_field(f->field, path);
  });
}

size_t fdi_field_rank(const fdi_field* f) { return f ? f->field.rank() : 0; }

size_t fdi_field_size(const fdi_field* f) { return f ? f->field.size() : 0; }

fdi_status fdi_field_dims(const fdi_field* f, size_t* dims) {
  return guarded([&] {
    require(f, "field");
    require(dims, "dims");
    for (std::size_t i = 0; i < f->field.rank(); ++i) dims[i] = f->field.dims()[i];
  });
}

fdi_status fdi_field_spacings(const fdi_field* f, double* spacings) {
  return guarded([&] {
    require(f, "field");
    require(spacings, "spacings");
    for (std::size_t i = 0; i < f->field.rank(); ++i) spacings[i] = f->field.spacings()[i];
  });
}

fdi_status fdi_field_labels(const fdi_field* f, char* labels) {
  return guarded([&] {
    require(f, "field");
    require(labels, "labels");
    for (std::size_t i = 0; i < f->field.rank(); ++i) labels[i] = fdi::axis_char(f->field.labels()[i]);
  });
}

const double* fdi_field_data(const fdi_field* f) { return f ? f->field.data().data() : nullptr; }

fdi_status fdi_field_stats(const fdi_field* f, double* mean, double* std, double* min, double* max) {
  return guarded([&] {
    require(f, "field");
    const auto s = fdi::field_stats(f->field);
    if (mean) *mean = s.mean;
    if (std) *std = s.std;
    if (min) *min = s.min;
    if (max) *max = s.max;
  });
}

fdi_status fdi_equation_names(char** out) {
  return guarded([&] {
    require(out, "out");
    *out = dup_string(json(fdi::equation_names()).dump());
  });
}

fdi_status fdi_synth(const char* equation, const char* grid_json, fdi_field** out, char** sidecar) {
  return guarded([&] {
    require(equation, "equation");
    require(out, "out");
    *out = nullptr;
    if (sidecar) *sidecar = nullptr;
    const auto eq = fdi::equation_spec(equation);
    const auto grid = grid_json && *grid_json ? fdi::grid_from_json(json::parse(grid_json))
                                              : fdi::default_grid(equation);
    auto field = std::make_unique<fdi_field>(fdi_field{fdi::solve_reference(eq, grid)});
    if (sidecar) *sidecar = dup_string(sidecar_json(eq, grid).dump(2));
    *out = field.release();
  });
}

fdi_status fdi_inject_noise(const fdi_field* f, double alpha, uint64_t seed, fdi_field** out) {
  return guarded([&] {
    require(f, "field");
    require(out, "out");
    *out = nullptr;
    *out = new fdi_field{fdi::inject_noise(f->field, {alpha, seed})};
  });
}

fdi_status fdi_default_config(size_t spatial_dims, int noisy, char** out) {
  return guarded([&] {
    require(out, "out");
    if (spatial_dims < 1 || spatial_dims > 3)
      fdi::fail(fdi::ErrorKind::invalid_argument, "spatial rank must be 1, 2 or 3");
    *out = dup_string(fdi::default_pipeline(spatial_dims, noisy != 0).to_json().dump(2));
  });
}

fdi_status fdi_identify(const fdi_field* f, const char* config_json, char** result_json) {
  return guarded([&] {
    require(f, "field");
    require(result_json, "result_json");
    *result_json = nullptr;
    json overlay = parse_or_empty(config_json);
    const bool noisy = overlay.value("noisy", false);
    overlay.erase("noisy");
    std::string dump;
    if (overlay.contains("dump_system")) {
      dump = overlay.at("dump_system").get<std::string>();
      overlay.erase("dump_system");
    }
    const fdi::PipelineConfig cfg = resolve_config(f->field.spatial_rank(), noisy, overlay);
    const fdi::IdentResult r = fdi::identify(f->field, cfg);
    if (!dump.empty()) {
      const auto spec = cfg.library ? *cfg.library : fdi::standard_library(static_cast<int>(f->field.spatial_rank()));
      const auto lib = fdi::evaluate_library(f->field, spec, cfg.diff);
      const auto cut = cfg.cutoff ? *cfg.cutoff : fdi::default_cutoff(f->field.rank());
      fdi::write_system_csv(fdi::assemble_freq_system(lib, cut, cfg.normalize), dump);
    }
    *result_json = dup_string(r.to_json().dump(2));
  });
}

fdi_status fdi_sweep(const char* options_json, char** report_json) {
  return guarded([&] {
    require(report_json, "report_json");
    *report_json = nullptr;
    json opts = parse_or_empty(options_json);
    auto in = bench_input(opts);
    const auto cfg = config_for(in.clean, opts);
    const auto s = sweep_options(opts);
    const auto report = fdi::alpha_sweep(in.clean, in.truth, cfg, s);
    if (opts.contains("csv")) fdi::write_sweep_csv(report, in.truth, opts.at("csv").get<std::string>());
    json out = report.to_json();
    out["options"] = in.echo;
    out["effective_config"] = effective_configs(cfg);
    *report_json = dup_string(out.dump(2));
  });
}

fdi_status fdi_compare(const char* options_json, char** report_json) {
  return guarded([&] {
    require(report_json, "report_json");
    *report_json = nullptr;
    json opts = parse_or_empty(options_json);
    auto in = bench_input(opts);
    const auto cfg = config_for(in.clean, opts);
    const auto s = sweep_options(opts);
    fdi::CompareOptions c;
    c.alphas = s.alphas;
    c.trials = s.trials;
    c.seed_base = s.seed_base;
    c.jobs = s.jobs;
    if (opts.contains("methods")) {
      for (const auto& m : opts.at("methods")) {
        fdi::MethodVariant v;
        v.domain = fdi::parse_domain(m.at("domain").get<std::string>());
        v.label = m.value("label", std::string(fdi::to_string(v.domain)));
        if (m.contains("cutoff") && !m.at("cutoff").is_null())
          v.cutoff = fdi::CutoffSpec{m.at("cutoff").get<std::vector<std::size_t>>()};
        c.methods.push_back(v);
      }
    } else {
      c.methods = fdi::default_method_variants(in.clean.dims());
    }
    json methods = json::array();
    for (const auto& m : c.methods)
      methods.push_back({{"label", m.label},
                         {"domain", fdi::to_string(m.domain)},
                         {"cutoff", m.cutoff ? json(m.cutoff->modes) : json(nullptr)}});
    in.echo["methods"] = methods;
    const auto rows = fdi::compare_methods(in.clean, in.truth, cfg, c);
    if (opts.contains("csv")) fdi::write_compare_csv(rows, in.truth, opts.at("csv").get<std::string>());
    json rs = json::array();
    for (const auto& r : rows)
      rs.push_back({{"alpha", r.alpha},
                    {"method", r.method},
                    {"trials", r.trials},
                    {"failed", r.failed},
                    {"mean_abs_error", r.mean_abs_error}});
    json out{{"rows", rs}, {"options", in.echo}, {"effective_config", effective_configs(cfg)}};
    *report_json = dup_string(out.dump(2));
  });
}

fdi_status fdi_csr_vs_stlm(const char* options_json, char** report_json) {
  return guarded([&] {
    require(report_json, "report_json");
    *report_json = nullptr;
    json opts = parse_or_empty(options_json);
    auto in = bench_input(opts);
    const auto cfg = config_for(in.clean, opts);
    const auto report = fdi::csr_vs_stlm(in.clean, in.truth, cfg, sweep_options(opts));
    if (opts.contains("csv")) fdi::write_selector_csv(report, opts.at("csv").get<std::string>());
    json out = report.to_json();
    out["options"] = in.echo;
    out["effective_config"] = effective_configs(cfg);
    *report_json = dup_string(out.dump(2));
  });
}

}  // extern "C"
