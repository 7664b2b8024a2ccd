// Scoring, noise sweeps and method/selector comparisons.

#include "bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include "error.hpp"
#include "rng.hpp"

namespace fdi {

namespace {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots so the outcome is independent of scheduling.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

PipelineConfig with_truth_library(PipelineConfig cfg, const Field& f, const EquationSpec& truth) {
  if (!cfg.library) {
    cfg.library = standard_library(static_cast<int>(f.spatial_rank()));
    cfg.library->lhs_order = truth.lhs_order;
  }
  return cfg;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void check_alphas(const std::vector<double>& alphas) {
  if (alphas.empty()) fail(ErrorKind::invalid_argument, "alpha grid is empty");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0) || !std::isfinite(alphas[i]))
      fail(ErrorKind::invalid_argument, "alpha values must be finite and non-negative");
    if (i > 0 && alphas[i] <= alphas[i - 1])
      fail(ErrorKind::invalid_argument, "alpha grid must be strictly ascending");
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

}  // namespace

bool structure_correct(const IdentResult& result, const EquationSpec& truth) {
  return sorted(result.selected_names()) == sorted(truth.support());
}

double mean_relative_error(const IdentResult& result, const EquationSpec& truth) {
  if (!structure_correct(result, truth))
    fail(ErrorKind::invalid_argument, "mean relative error is undefined for a wrong structure");
  double sum = 0.0;
  for (const auto& t : truth.true_terms) {
    const double est = *result.coefficient_of(t.term.name());
    sum += std::abs(est - t.coefficient) / std::abs(t.coefficient);
  }
  return sum / static_cast<double>(truth.true_terms.size());
}

ConfigForAlpha default_config_for(std::size_t spatial_dims) {
  return [spatial_dims](double alpha) { return default_pipeline(spatial_dims, alpha > 0.0); };
}

nlohmann::json TrialOutcome::to_json() const {
  return {{"alpha", alpha},
          {"alpha_index", alpha_index},
          {"trial", trial},
          {"seed", seed},
          {"structure_correct", structure_correct},
          {"mre", optional_json(mre)},
          {"coefficients", coefficients},
          {"term_errors", term_errors},
          {"selected", selected},
          {"error", error ? nlohmann::json(*error) : nlohmann::json(nullptr)}};
}

TrialOutcome TrialOutcome::from_json(const nlohmann::json& j) {
  TrialOutcome o;
  o.alpha = j.at("alpha").get<double>();
  o.alpha_index = j.at("alpha_index").get<std::size_t>();
  o.trial = j.at("trial").get<std::size_t>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.structure_correct = j.at("structure_correct").get<bool>();
  if (!j.at("mre").is_null()) o.mre = j.at("mre").get<double>();
  o.coefficients = j.at("coefficients").get<std::map<std::string, double>>();
  o.term_errors = j.at("term_errors").get<std::map<std::string, double>>();
  o.selected = j.at("selected").get<std::vector<std::string>>();
  if (j.contains("error") && !j.at("error").is_null()) o.error = j.at("error").get<std::string>();
  return o;
}

TrialOutcome run_trial(const Field& clean, const EquationSpec& truth, const PipelineConfig& cfg,
                       double alpha, std::size_t alpha_index, std::size_t trial, std::uint64_t seed_base) {
  TrialOutcome o;
  o.alpha = alpha;
  o.alpha_index = alpha_index;
  o.trial = trial;
  o.seed = derive_seed(seed_base, alpha_index, trial);
  try {
    const Field noisy = inject_noise(clean, {alpha, o.seed});
    const IdentResult r = identify(noisy, with_truth_library(cfg, clean, truth));
    o.selected = r.selected_names();
    for (std::size_t i = 0; i < r.selected.size(); ++i) o.coefficients[o.selected[i]] = r.coefficients.values[i];
    for (const auto& t : truth.true_terms) {
      auto c = r.coefficient_of(t.term.name());
      if (c) o.term_errors[t.term.name()] = std::abs(*c - t.coefficient) / std::abs(t.coefficient);
    }
    o.structure_correct = structure_correct(r, truth);
    if (o.structure_correct) o.mre = mean_relative_error(r, truth);
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  return o;
}

std::vector<AlphaAggregate> aggregate(const std::vector<TrialOutcome>& outcomes,
                                      const std::vector<double>& alphas, const EquationSpec& truth) {
  std::vector<AlphaAggregate> out(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) out[a].alpha = alphas[a];
  std::vector<std::map<std::string, std::size_t>> counts(alphas.size());
  for (const auto& o : outcomes) {
    if (o.alpha_index >= alphas.size()) fail(ErrorKind::invalid_argument, "trial outcome outside alpha grid");
    auto& g = out[o.alpha_index];
    ++g.trials;
    if (o.error) ++g.failed;
    if (!o.structure_correct) continue;
    ++g.correct;
    g.mean_mre = g.mean_mre.value_or(0.0) + *o.mre;
    g.max_mre = std::max(g.max_mre.value_or(0.0), *o.mre);
    for (const auto& t : truth.true_terms) {
      const auto name = t.term.name();
      g.mean_term_error[name] += o.term_errors.at(name);
      ++counts[o.alpha_index][name];
    }
  }
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    auto& g = out[a];
    if (g.mean_mre) *g.mean_mre /= static_cast<double>(g.correct);
    for (auto& [name, v] : g.mean_term_error) v /= static_cast<double>(counts[a][name]);
  }
  return out;
}

std::optional<double> max_correct_alpha(const std::vector<double>& alphas,
                                        const std::vector<std::size_t>& correct, std::size_t trials,
                                        bool* exceeds_grid) {
  std::optional<double> best;
  bool all = true;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    if (correct[a] != trials) {
      all = false;
      break;
    }
    best = alphas[a];
  }
  if (exceeds_grid) *exceeds_grid = all && !alphas.empty();
  return best;
}

nlohmann::json SweepReport::to_json() const {
  nlohmann::json aggs = nlohmann::json::array();
  for (const auto& g : aggregates)
    aggs.push_back({{"alpha", g.alpha},
                    {"trials", g.trials},
                    {"correct", g.correct},
                    {"failed", g.failed},
                    {"mean_mre", optional_json(g.mean_mre)},
                    {"max_mre", optional_json(g.max_mre)},
                    {"mean_term_error", g.mean_term_error}});
  nlohmann::json trials_json = nlohmann::json::array();
  for (const auto& o : outcomes) trials_json.push_back(o.to_json());
  return {{"equation", equation},     {"alphas", alphas},
          {"trials", trials},         {"seed_base", seed_base},
          {"alpha_max", optional_json(alpha_max)}, {"exceeds_grid", exceeds_grid},
          {"aggregates", aggs},       {"outcomes", trials_json}};
}

SweepReport alpha_sweep(const Field& clean, const EquationSpec& truth, const ConfigForAlpha& config,
                        const SweepOptions& opts) {
  check_alphas(opts.alphas);
  if (opts.trials == 0) fail(ErrorKind::invalid_argument, "trials must be positive");
  const std::size_t total = opts.alphas.size() * opts.trials;

  std::vector<std::optional<TrialOutcome>> slots(total);
  if (opts.journal && std::filesystem::exists(*opts.journal)) {
    std::ifstream in(*opts.journal);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      TrialOutcome o;
      try {
        o = TrialOutcome::from_json(nlohmann::json::parse(line));
      } catch (const std::exception&) {
        continue;  // torn last line from an interrupted run
      }
      if (o.alpha_index >= opts.alphas.size() || o.trial >= opts.trials) continue;
      if (o.alpha != opts.alphas[o.alpha_index]) continue;
      if (o.seed != derive_seed(opts.seed_base, o.alpha_index, o.trial)) continue;
      slots[o.alpha_index * opts.trials + o.trial] = o;
    }
  }

  std::ofstream journal;
  std::mutex journal_mutex;
  if (opts.journal) {
    journal.open(*opts.journal, std::ios::app);
    if (!journal) fail(ErrorKind::io, "cannot open journal " + opts.journal->string());
  }

  std::vector<PipelineConfig> configs;
  for (double a : opts.alphas) configs.push_back(config(a));

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < total; ++i)
    if (!slots[i]) pending.push_back(i);

  parallel_for(pending.size(), opts.jobs, [&](std::size_t p) {
    const std::size_t i = pending[p];
    const std::size_t a = i / opts.trials, t = i % opts.trials;
    TrialOutcome o = run_trial(clean, truth, configs[a], opts.alphas[a], a, t, opts.seed_base);
    if (journal.is_open()) {
      std::lock_guard lock(journal_mutex);
      journal << o.to_json().dump() << '\n' << std::flush;
    }
    slots[i] = std::move(o);
  });

  SweepReport r;
  r.equation = truth.name;
  r.alphas = opts.alphas;
  r.trials = opts.trials;
  r.seed_base = opts.seed_base;
  for (auto& s : slots) r.outcomes.push_back(std::move(*s));
  r.aggregates = aggregate(r.outcomes, r.alphas, truth);
  std::vector<std::size_t> correct;
  for (const auto& g : r.aggregates) correct.push_back(g.correct);
  r.alpha_max = max_correct_alpha(r.alphas, correct, r.trials, &r.exceeds_grid);
  return r;
}

void write_sweep_csv(const SweepReport& report, const EquationSpec& truth, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "alpha,trial,seed,structure_correct,mre";
  for (const auto& t : truth.true_terms) out << ",coef_" << t.term.name();
  out << '\n';
  for (const auto& o : report.outcomes) {
    out << csv_number(o.alpha) << ',' << o.trial << ',' << o.seed << ',' << (o.structure_correct ? 1 : 0) << ','
        << (o.mre ? csv_number(*o.mre) : "");
    for (const auto& t : truth.true_terms) {
      auto it = o.coefficients.find(t.term.name());
      out << ',' << (it != o.coefficients.end() ? csv_number(it->second) : "");
    }
    out << '\n';
  }
}

std::vector<MethodVariant> default_method_variants(const std::vector<std::size_t>& dims) {
  CutoffSpec low, high;
  for (std::size_t n : dims) {
    low.modes.push_back(std::max<std::size_t>(2, (n + 15) / 16));
    high.modes.push_back(std::max<std::size_t>(2, (n + 7) / 8));
  }
  auto label = [](const CutoffSpec& c) {
    std::string s = "lowpass_";
    for (std::size_t i = 0; i < c.modes.size(); ++i) s += (i ? "x" : "") + std::to_string(c.modes[i]);
    return s;
  };
  return {{"freq", Domain::freq, std::nullopt},
          {"timespace", Domain::timespace, std::nullopt},
          {label(low), Domain::lowpass_then_timespace, low},
          {label(high), Domain::lowpass_then_timespace, high}};
}

std::vector<MethodErrorRow> compare_methods(const Field& clean, const EquationSpec& truth,
                                            const ConfigForAlpha& config, const CompareOptions& opts) {
  check_alphas(opts.alphas);
  if (opts.trials == 0) fail(ErrorKind::invalid_argument, "trials must be positive");
  const auto methods = opts.methods.empty() ? default_method_variants(clean.dims()) : opts.methods;
  const std::size_t nm = methods.size(), nt = opts.trials;

  LibrarySpec lib;
  lib.lhs_order = truth.lhs_order;
  for (const auto& t : truth.true_terms) lib.terms.push_back(t.term);

  // errors[(a * nt + t) * nm + m] holds per-term absolute errors or nothing
  std::vector<std::optional<std::vector<double>>> errors(opts.alphas.size() * nt * nm);
  parallel_for(opts.alphas.size() * nt, opts.jobs, [&](std::size_t i) {
    const std::size_t a = i / nt, t = i % nt;
    const Field noisy = inject_noise(clean, {opts.alphas[a], derive_seed(opts.seed_base, a, t)});
    for (std::size_t m = 0; m < nm; ++m) {
      PipelineConfig cfg = config(opts.alphas[a]);
      cfg.library = lib;
      cfg.selector = Selector::known;
      cfg.known_terms = lib.terms;
      cfg.domain = methods[m].domain;
      if (methods[m].domain == Domain::freq && methods[m].cutoff) cfg.cutoff = methods[m].cutoff;
      if (methods[m].domain == Domain::lowpass_then_timespace) cfg.lowpass_cutoff = methods[m].cutoff;
      try {
        const IdentResult r = identify(noisy, cfg);
        std::vector<double> e;
        for (const auto& tt : truth.true_terms) e.push_back(std::abs(*r.coefficient_of(tt.term.name()) - tt.coefficient));
        errors[i * nm + m] = std::move(e);
      } catch (const Error&) {
      }
    }
  });

  std::vector<MethodErrorRow> rows;
  for (std::size_t a = 0; a < opts.alphas.size(); ++a)
    for (std::size_t m = 0; m < nm; ++m) {
      MethodErrorRow row;
      row.alpha = opts.alphas[a];
      row.method = methods[m].label;
      row.trials = nt;
      std::vector<double> sum(truth.true_terms.size(), 0.0);
      std::size_t ok = 0;
      for (std::size_t t = 0; t < nt; ++t) {
        const auto& e = errors[(a * nt + t) * nm + m];
        if (!e) {
          ++row.failed;
          continue;
        }
        ++ok;
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*e)[k];
      }
      for (std::size_t k = 0; k < sum.size(); ++k)
        row.mean_abs_error[truth.true_terms[k].term.name()] = ok ? sum[k] / static_cast<double>(ok) : NAN;
      rows.push_back(std::move(row));
    }
  return rows;
}

void write_compare_csv(const std::vector<MethodErrorRow>& rows, const EquationSpec& truth,
                       const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "alpha,method";
  for (const auto& t : truth.true_terms) out << ",err_" << t.term.name();
  out << '\n';
  for (const auto& r : rows) {
    out << csv_number(r.alpha) << ',' << r.method;
    for (const auto& t : truth.true_terms) out << ',' << csv_number(r.mean_abs_error.at(t.term.name()));
    out << '\n';
  }
}

nlohmann::json SelectorReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"alpha", r.alpha}, {"trials", r.trials}, {"csr_correct", r.csr_correct},
                  {"stlm_correct", r.stlm_correct}});
  return {{"rows", rs},
          {"csr_max_alpha", optional_json(csr_max_alpha)},
          {"stlm_max_alpha", optional_json(stlm_max_alpha)},
          {"csr_exceeds_grid", csr_exceeds_grid},
          {"stlm_exceeds_grid", stlm_exceeds_grid}};
}

SelectorReport csr_vs_stlm(const Field& clean, const EquationSpec& truth, const ConfigForAlpha& config,
                           const SweepOptions& opts) {
  check_alphas(opts.alphas);
  if (opts.trials == 0) fail(ErrorKind::invalid_argument, "trials must be positive");
  const std::size_t k = truth.true_terms.size(), nt = opts.trials;
  const auto support = sorted(truth.support());

  std::vector<std::pair<bool, bool>> hits(opts.alphas.size() * nt);
  parallel_for(hits.size(), opts.jobs, [&](std::size_t i) {
    const std::size_t a = i / nt, t = i % nt;
    PipelineConfig cfg = with_truth_library(config(opts.alphas[a]), clean, truth);
    cfg.domain = Domain::freq;
    try {
      const Field noisy = inject_noise(clean, {opts.alphas[a], derive_seed(opts.seed_base, a, t)});
      const RealSystem sys = assemble_system(noisy, cfg);
      auto names = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::string> v;
        for (auto j : idx) v.push_back(sys.column_names[j]);
        return sorted(v);
      };
      const auto csr = select_terms(support_rates(sys), SelectionPolicy::fixed(k));
      const auto st = stlm(sys, StlmOptions{k, std::nullopt});
      hits[i] = {names(csr) == support, names(st.selected) == support};
    } catch (const Error&) {
      hits[i] = {false, false};
    }
  });

  SelectorReport rep;
  std::vector<std::size_t> csr, st;
  for (std::size_t a = 0; a < opts.alphas.size(); ++a) {
    SelectorRow row{opts.alphas[a], nt, 0, 0};
    for (std::size_t t = 0; t < nt; ++t) {
      row.csr_correct += hits[a * nt + t].first;
      row.stlm_correct += hits[a * nt + t].second;
    }
    csr.push_back(row.csr_correct);
    st.push_back(row.stlm_correct);
    rep.rows.push_back(row);
  }
  rep.csr_max_alpha = max_correct_alpha(opts.alphas, csr, nt, &rep.csr_exceeds_grid);
  rep.stlm_max_alpha = max_correct_alpha(opts.alphas, st, nt, &rep.stlm_exceeds_grid);
  return rep;
}

void write_selector_csv(const SelectorReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "alpha,trials,csr_correct,stlm_correct\n";
  for (const auto& r : report.rows)
    out << csv_number(r.alpha) << ',' << r.trials << ',' << r.csr_correct << ',' << r.stlm_correct << '\n';
}

}  // namespace fdi
