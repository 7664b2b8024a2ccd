// fdi: command-line front end over the C library.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdi/fdi.h"

namespace {

using nlohmann::json;

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };
Level g_level = Level::info;

void log(Level l, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (l <= g_level) std::cerr << "[" << names[static_cast<int>(l)] << "] " << msg << "\n";
}

/// Library failure carrying its status for the exit code.
struct Failure {
  fdi_status status;
  std::string message;
};

struct Usage {
  std::string message;
};

void check(fdi_status s) {
  if (s != FDI_OK) throw Failure{s, fdi_last_error()};
}

/// Owns a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  fdi_string_free(s);
  return out;
}

struct FieldHandle {
  fdi_field* f = nullptr;
  FieldHandle() = default;
  FieldHandle(const FieldHandle&) = delete;
  FieldHandle& operator=(const FieldHandle&) = delete;
  ~FieldHandle() { fdi_field_free(f); }
};

std::filesystem::path sidecar_of(const std::filesystem::path& bundle) {
  auto p = bundle;
  p.replace_extension(".json");
  return p;
}

json read_json_file(const std::string& path, const char* flag) {
  std::ifstream in(path);
  if (!in) throw Usage{std::string(flag) + ": cannot open '" + path + "'"};
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Usage{std::string(flag) + ": '" + path + "' is not valid JSON: " + e.what()};
  }
}

std::optional<json> read_sidecar(const std::filesystem::path& bundle) {
  const auto p = sidecar_of(bundle);
  if (!std::filesystem::exists(p)) return std::nullopt;
  return read_json_file(p.string(), "--in");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Failure{FDI_ERR_IO, "cannot write '" + path.string() + "'"};
  out << text << "\n";
  if (!out) throw Failure{FDI_ERR_IO, "write failed for '" + path.string() + "'"};
}

std::vector<std::size_t> parse_counts(const std::string& csv, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(item, &pos);
      if (pos != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Usage{std::string(flag) + ": expected positive integers, got '" + csv + "'"};
    }
  }
  if (out.empty() || out.size() > 4) throw Usage{std::string(flag) + ": expected 1 to 4 values"};
  return out;
}

/// "a,b,c" or "start:stop:step".
std::vector<double> parse_alphas(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      std::stringstream ss(text);
      std::string a, b, c;
      std::getline(ss, a, ':');
      std::getline(ss, b, ':');
      std::getline(ss, c, ':');
      const double start = std::stod(a), stop = std::stod(b), step = std::stod(c);
      if (!(step > 0.0) || stop < start) throw std::invalid_argument(text);
      const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
      for (long i = 0; i <= n; ++i) out.push_back(std::round((start + i * step) * 1e12) / 1e12);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    }
  } catch (const std::exception&) {
    throw Usage{"--alphas: expected a comma list or start:stop:step, got '" + text + "'"};
  }
  if (out.empty()) throw Usage{"--alphas: empty grid"};
  return out;
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Pipeline flags; unset ones leave the config file or the defaults in place.
struct PipelineFlags {
  std::optional<std::string> config_file;
  std::optional<std::string> diff, cutoff, library, method, policy, domain, lowpass_cutoff, known_terms;
  std::optional<int> fd_order, poly_degree, poly_window, stride, lhs_order;
  std::optional<std::size_t> k, stlm_k, sample_stride;
  std::optional<double> min_q, stlm_threshold, ridge_lambda, ridge_tol;
  bool no_normalize = false;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "JSON file with pipeline settings; flags override it");
    app->add_option("--diff", diff, "Differentiation method (default: poly for noisy 1-D data, fd otherwise)")
        ->check(CLI::IsMember({"fd", "poly"}));
    app->add_option("--fd-order", fd_order, "Accuracy order of central differences (default: 4)");
    app->add_option("--poly-degree", poly_degree, "Local polynomial degree (default: 6)");
    app->add_option("--poly-window", poly_window, "Local polynomial window, odd (default: 21)");
    app->add_option("--stride", stride, "Stencil spacing in samples (default: 2 for 3-D data, 1 otherwise)");
    app->add_option("--cutoff", cutoff,
                    "Retained modes per axis, time last (default: 12,4 | 6,6,3 | 4,4,4,3 by spatial rank)");
    app->add_flag("--no-normalize", no_normalize, "Keep raw column scales (diagnostics)");
    app->add_option("--library", library, "1d, 2d, 3d or a JSON file of terms (default: standard for the rank)");
    app->add_option("--lhs-order", lhs_order, "Time-derivative order of the left-hand side (default: 1)");
    app->add_option("--method", method, "Selector (default: csr)")
        ->check(CLI::IsMember({"csr", "stlm", "st_ridge", "known"}));
    app->add_option("--policy", policy, "CSR selection rule (default: gap)")
        ->check(CLI::IsMember({"gap", "fixed_k", "threshold"}));
    app->add_option("--k", k, "Terms kept by --policy fixed_k");
    app->add_option("--min-q", min_q, "Support-rate floor for --policy threshold");
    app->add_option("--stlm-k", stlm_k, "STLM stops at this many terms (default: 2)");
    app->add_option("--stlm-threshold", stlm_threshold, "STLM deletes normalized coefficients below this");
    app->add_option("--ridge-lambda", ridge_lambda, "Ridge penalty for st_ridge (default: 1e-5)");
    app->add_option("--ridge-tol", ridge_tol, "Coefficient threshold for st_ridge (default: 1e-3)");
    app->add_option("--known-terms", known_terms, "Comma list of terms for --method known");
    app->add_option("--domain", domain, "System assembly (default: freq)")
        ->check(CLI::IsMember({"freq", "timespace", "lowpass"}));
    app->add_option("--lowpass-cutoff", lowpass_cutoff, "Low-pass modes per axis for --domain lowpass");
    app->add_option("--sample-stride", sample_stride, "Row subsampling for timespace systems (default: 1)");
  }

  /// Config file overlaid with the flags that were given.
  json overlay() const {
    json j = config_file ? read_json_file(*config_file, "--config") : json::object();
    if (!j.is_object()) throw Usage{"--config: expected a JSON object"};
    json f = json::object();
    if (diff) f["diff"]["method"] = *diff;
    if (fd_order) f["diff"]["fd_order"] = *fd_order;
    if (poly_degree) f["diff"]["poly_degree"] = *poly_degree;
    if (poly_window) f["diff"]["poly_window"] = *poly_window;
    if (stride) f["diff"]["stride"] = *stride;
    if (cutoff) f["cutoff"] = parse_counts(*cutoff, "--cutoff");
    if (no_normalize) f["normalize"] = false;
    if (library) {
      if (*library == "1d" || *library == "2d" || *library == "3d")
        f["library"] = *library;
      else
        f["library"] = read_json_file(*library, "--library");
    }
    if (lhs_order) f["lhs_order"] = *lhs_order;
    if (method) f["selector"] = *method;
    if (policy) f["policy"]["mode"] = *policy;
    if (k) f["policy"]["k"] = *k;
    if (min_q) f["policy"]["min_q"] = *min_q;
    if (stlm_k) f["stlm"]["final_k"] = *stlm_k;
    if (stlm_threshold) f["stlm"]["threshold"] = *stlm_threshold;
    if (ridge_lambda) f["ridge"]["lambda"] = *ridge_lambda;
    if (ridge_tol) f["ridge"]["tol"] = *ridge_tol;
    if (known_terms) f["known_terms"] = split_names(*known_terms);
    if (domain) f["domain"] = *domain;
    if (lowpass_cutoff) f["lowpass_cutoff"] = parse_counts(*lowpass_cutoff, "--lowpass-cutoff");
    if (sample_stride) f["sample_stride"] = *sample_stride;
    j.merge_patch(f);
    return j;
  }
};

std::size_t default_jobs() {
  if (const char* env = std::getenv("FDI_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    log(Level::warn, "ignoring FDI_JOBS='" + std::string(env) + "'");
  }
  return 1;
}

/// Options shared by the benchmark subcommands.
struct BenchFlags {
  std::optional<std::string> equation, input, grid, csv, out;
  std::string alphas;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = default_jobs();
  PipelineFlags pipeline;

  void add_to(CLI::App* app, const std::string& default_alphas) {
    alphas = default_alphas;
    app->add_option("--equation", equation, "Catalog equation (default: from the sidecar of --in)");
    app->add_option("--in", input, "Clean field bundle used instead of solving the catalog equation");
    app->add_option("--grid", grid, "JSON grid file for the catalog solution (default: catalog grid)");
    app->add_option("--alphas", alphas, "Noise levels, comma list or start:stop:step")->capture_default_str();
    app->add_option("--trials", trials, "Seeds per noise level")->capture_default_str();
    app->add_option("--seed", seed, "Base seed for all trials")->capture_default_str();
    app->add_option("--jobs", jobs, "Worker threads (default: FDI_JOBS or 1)")->capture_default_str();
    app->add_option("--csv", csv, "Tabular per-trial or per-method output");
    app->add_option("--out", out, "JSON report path (default: stdout)");
    pipeline.add_to(app);
  }

  json options() const {
    json o{{"alphas", parse_alphas(alphas)}, {"trials", trials}, {"seed", seed}, {"jobs", jobs}};
    if (trials < 1) throw Usage{"--trials: must be at least 1"};
    if (jobs < 1) throw Usage{"--jobs: must be at least 1"};
    if (equation) o["equation"] = *equation;
    if (input) o["input"] = *input;
    if (grid) o["grid"] = read_json_file(*grid, "--grid");
    if (csv) o["csv"] = *csv;
    o["config"] = pipeline.overlay();
    return o;
  }
};

void emit_report(const json& report, const std::optional<std::string>& out) {
  if (out)
    write_text(*out, report.dump(2));
  else
    std::cout << report.dump(2) << "\n";
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_alpha(const json& a) {
  return a.is_null() ? std::string("none") : fmt(a.get<double>(), 2);
}

// --- subcommands ---------------------------------------------------------

struct SynthArgs {
  std::string equation;
  std::string out;
  std::optional<std::string> grid;
};

void run_synth(const SynthArgs& a) {
  std::string grid_text;
  if (a.grid) grid_text = read_json_file(*a.grid, "--grid").dump();
  log(Level::info, "solving " + a.equation);
  FieldHandle f;
  char* side = nullptr;
  check(fdi_synth(a.equation.c_str(), a.grid ? grid_text.c_str() : nullptr, &f.f, &side));
  const std::string sidecar = take(side);
  check(fdi_field_write(f.f, a.out.c_str()));
  write_text(sidecar_of(a.out), sidecar);
  double mean = 0, sd = 0, mn = 0, mx = 0;
  check(fdi_field_stats(f.f, &mean, &sd, &mn, &mx));
  std::vector<std::size_t> dims(fdi_field_rank(f.f));
  check(fdi_field_dims(f.f, dims.data()));
  std::string shape;
  for (std::size_t i = 0; i < dims.size(); ++i) shape += (i ? "x" : "") + std::to_string(dims[i]);
  std::cout << a.equation << ": " << shape << " samples, mean " << fmt(mean) << ", std " << fmt(sd) << ", range ["
            << fmt(mn) << ", " << fmt(mx) << "] -> " << a.out << "\n";
}

struct NoiseArgs {
  std::string in, out;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

void run_noise(const NoiseArgs& a) {
  FieldHandle in, out;
  check(fdi_field_read(a.in.c_str(), &in.f));
  check(fdi_inject_noise(in.f, a.alpha, a.seed, &out.f));
  check(fdi_field_write(out.f, a.out.c_str()));
  json side = read_sidecar(a.in).value_or(json::object());
  side["noise"] = {{"alpha", a.alpha}, {"seed", a.seed}, {"source", a.in}};
  write_text(sidecar_of(a.out), side.dump(2));
  std::cout << "alpha " << fmt(a.alpha, 3) << ", seed " << a.seed << " -> " << a.out << "\n";
}

struct IdentifyArgs {
  std::string in;
  std::optional<std::string> out, dump_system;
  std::optional<bool> noisy;
  PipelineFlags pipeline;
};

void run_identify(const IdentifyArgs& a) {
  FieldHandle f;
  check(fdi_field_read(a.in.c_str(), &f.f));
  json overlay = a.pipeline.overlay();
  const auto side = read_sidecar(a.in);
  bool noisy = true;
  if (a.noisy) {
    noisy = *a.noisy;
  } else if (side) {
    const json& n = side->value("noise", json());
    noisy = n.is_object() && n.value("alpha", 0.0) > 0.0;
  }
  if (side && side->contains("equation") && !overlay.contains("lhs_order") && !overlay.contains("library")) {
    const int lhs = side->at("equation").value("lhs_order", 1);
    if (lhs != 1) overlay["lhs_order"] = lhs;
  }
  overlay["noisy"] = noisy;
  if (a.dump_system) overlay["dump_system"] = *a.dump_system;
  log(Level::debug, "config overlay " + overlay.dump());
  char* raw = nullptr;
  check(fdi_identify(f.f, overlay.dump().c_str(), &raw));
  json result = json::parse(take(raw));
  result["input"] = a.in;
  result["noisy_defaults"] = noisy;
  std::cout << result.at("equation_string").get<std::string>() << "\n";
  if (g_level >= Level::info) {
    std::cout << "residual " << result.value("residual", 0.0) << ", condition " << result.value("condition", 0.0)
              << "\n";
  }
  if (a.out) write_text(*a.out, result.dump(2));
}

void print_sweep(const json& r) {
  std::cout << "alpha    correct  mean_mre\n";
  for (const auto& g : r.at("aggregates")) {
    const auto& m = g.at("mean_mre");
    std::cout << fmt(g.at("alpha").get<double>(), 3) << "    " << g.at("correct").get<std::size_t>() << "/"
              << g.at("trials").get<std::size_t>() << "     " << (m.is_null() ? "-" : fmt(m.get<double>(), 5))
              << "\n";
  }
  std::cout << "alpha_max " << fmt_alpha(r.at("alpha_max")) << (r.value("exceeds_grid", false) ? " (exceeds grid)" : "")
            << "\n";
}

struct SweepArgs {
  BenchFlags bench;
  std::optional<std::string> journal;
};

void run_sweep(const SweepArgs& a) {
  json o = a.bench.options();
  if (a.journal) o["journal"] = *a.journal;
  log(Level::info, "sweep over " + std::to_string(o.at("alphas").size()) + " noise levels");
  char* raw = nullptr;
  check(fdi_sweep(o.dump().c_str(), &raw));
  const json r = json::parse(take(raw));
  print_sweep(r);
  emit_report(r, a.bench.out);
}

struct CompareArgs {
  BenchFlags bench;
  std::optional<std::string> methods;
};

void run_compare(const CompareArgs& a) {
  json o = a.bench.options();
  if (a.methods) o["methods"] = read_json_file(*a.methods, "--methods");
  char* raw = nullptr;
  check(fdi_compare(o.dump().c_str(), &raw));
  const json r = json::parse(take(raw));
  for (const auto& row : r.at("rows")) {
    std::cout << fmt(row.at("alpha").get<double>(), 3) << "  " << row.at("method").get<std::string>();
    for (const auto& [term, err] : row.at("mean_abs_error").items()) std::cout << "  " << term << " " << fmt(err, 6);
    std::cout << "\n";
  }
  emit_report(r, a.bench.out);
}

void run_selectors(const BenchFlags& b) {
  json o = b.options();
  char* raw = nullptr;
  check(fdi_csr_vs_stlm(o.dump().c_str(), &raw));
  const json r = json::parse(take(raw));
  std::cout << "alpha    csr   stlm\n";
  for (const auto& row : r.at("rows"))
    std::cout << fmt(row.at("alpha").get<double>(), 3) << "    " << row.at("csr_correct").get<std::size_t>() << "/"
              << row.at("trials").get<std::size_t>() << "  " << row.at("stlm_correct").get<std::size_t>() << "/"
              << row.at("trials").get<std::size_t>() << "\n";
  std::cout << "csr max alpha " << fmt_alpha(r.at("csr_max_alpha")) << ", stlm max alpha "
            << fmt_alpha(r.at("stlm_max_alpha")) << "\n";
  emit_report(r, b.out);
}

int exit_code(fdi_status s) {
  switch (s) {
    case FDI_ERR_DEGENERATE_GRID:
    case FDI_ERR_UNSTABLE:
    case FDI_ERR_DEGENERATE_SYSTEM:
    case FDI_ERR_INTERNAL:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identify PDEs from gridded data by frequency-domain regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fdi_version());
  app.fallthrough();
  std::string level = "info";
  app.add_option("--log-level", level, "Diagnostics on stderr")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Solve a catalog equation and write a field bundle with sidecar");
  synth_cmd->add_option("--equation", synth.equation, "Catalog equation name")->required();
  synth_cmd->add_option("--out", synth.out, "Output bundle path")->required();
  synth_cmd->add_option("--grid", synth.grid, "JSON grid file (default: catalog grid)");

  NoiseArgs noise;
  auto* noise_cmd = app.add_subcommand("noise", "Add alpha*std(u) Gaussian noise to a bundle");
  noise_cmd->add_option("--in", noise.in, "Input bundle")->required();
  noise_cmd->add_option("--out", noise.out, "Output bundle")->required();
  noise_cmd->add_option("--alpha", noise.alpha, "Noise level relative to std(u)")->capture_default_str();
  noise_cmd->add_option("--seed", noise.seed, "Generator seed")->capture_default_str();

  IdentifyArgs ident;
  auto* ident_cmd = app.add_subcommand("identify", "Identify the PDE behind a field bundle");
  ident_cmd->add_option("--in", ident.in, "Input bundle")->required();
  ident_cmd->add_option("--out", ident.out, "Result JSON path");
  ident_cmd->add_option("--dump-system", ident.dump_system, "CSV dump of the frequency system");
  ident_cmd->add_option("--noisy", ident.noisy, "Use noisy-data defaults (default: from the sidecar, else true)");
  ident.pipeline.add_to(ident_cmd);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Structure and error over a noise grid");
  sweep.bench.add_to(sweep_cmd, "0:2:0.25");
  sweep_cmd->add_option("--journal", sweep.journal, "JSON-lines trial record for resuming");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Known-structure coefficient errors per assembly method");
  compare.bench.add_to(compare_cmd, "0,0.1,0.5,1");
  compare_cmd->add_option("--methods", compare.methods, "JSON file of [{label, domain, cutoff}]");

  BenchFlags selectors;
  auto* sel_cmd = app.add_subcommand("csr-vs-stlm", "Support-rate and thresholding selectors on shared systems");
  selectors.add_to(sel_cmd, "0,0.02,0.05,0.1,0.15,0.2,0.25,0.5,0.75,1,1.5,2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  g_level = level == "error" ? Level::error : level == "warn" ? Level::warn : level == "debug" ? Level::debug : Level::info;

  try {
    if (*synth_cmd) run_synth(synth);
    if (*noise_cmd) run_noise(noise);
    if (*ident_cmd) run_identify(ident);
    if (*sweep_cmd) run_sweep(sweep);
    if (*compare_cmd) run_compare(compare);
    if (*sel_cmd) run_selectors(selectors);
  } catch (const Usage& u) {
    std::cerr << "fdi: " << u.message << "\n";
    return 1;
  } catch (const Failure& f) {
    std::cerr << "fdi: " << fdi_status_string(f.status) << ": " << f.message << "\n";
    return exit_code(f.status);
  } catch (const json::exception& e) {
    std::cerr << "fdi: malformed library output: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
