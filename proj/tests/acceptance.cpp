// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"
#include "freqsys.hpp"
#include "property_binaries.hpp"
#include "rng.hpp"

using namespace fdi;

namespace {

constexpr std::uint64_t kSeedBase = 1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

const Field& clean(const std::string& name) {
  static std::map<std::string, Field> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, solve_reference(equation_spec(name), default_grid(name))).first;
  return it->second;
}

SweepReport sweep(const std::string& name, std::vector<double> alphas, std::size_t trials) {
  SweepOptions o;
  o.alphas = std::move(alphas);
  o.trials = trials;
  o.seed_base = kSeedBase;
  const auto& f = clean(name);
  return alpha_sweep(f, equation_spec(name), default_config_for(f.spatial_rank()), o);
}

std::string mre_text(const AlphaAggregate& g) {
  return g.mean_mre ? fmt("%.2f%%", 100.0 * *g.mean_mre) : std::string("n/a");
}

Verdict clean_burgers() {
  Verdict v;
  const auto start = Clock::now();
  const auto r = identify(clean("burgers1d"), default_pipeline(1, false));
  const double secs = seconds_since(start);
  const auto truth = equation_spec("burgers1d");
  v.require(structure_correct(r, truth), r.equation_string());
  if (structure_correct(r, truth)) {
    const double e1 = std::abs(*r.coefficient_of("u*u_x") + 1.0);
    const double e2 = std::abs(*r.coefficient_of("u_xx") - 0.05) / 0.05;
    v.require(e1 <= 0.01 && e2 <= 0.01, fmt("errors %.3f%% / %.3f%%", 100 * e1, 100 * e2));
  }
  v.require(secs < 5.0, fmt("identify %.2f s", secs));
  return v;
}

Verdict noisy_burgers() {
  Verdict v;
  const auto rep = sweep("burgers1d", {0.1, 1.0}, 10);
  const auto& lo = rep.aggregates[0];
  const auto& hi = rep.aggregates[1];
  v.require(lo.correct == 10, fmt("alpha 0.1: %zu/10 correct", lo.correct));
  v.require(lo.mean_mre && *lo.max_mre <= 0.03, "alpha 0.1 MRE " + mre_text(lo) + fmt(" (max %.2f%%)", 100 * lo.max_mre.value_or(NAN)));
  v.require(hi.correct == 10, fmt("alpha 1.0: %zu/10 correct", hi.correct));
  v.require(hi.correct == 10 && *hi.mean_mre <= 0.10, "alpha 1.0 MRE " + mre_text(hi));
  return v;
}

Verdict ks_kdv() {
  Verdict v;
  for (const char* name : {"ks", "kdv"}) {
    const auto rep = sweep(name, {0.05, 1.0}, 10);
    const auto& lo = rep.aggregates[0];
    const auto& hi = rep.aggregates[1];
    v.require(lo.correct == 10, fmt("%s alpha 0.05: %zu/10", name, lo.correct));
    v.require(lo.max_mre && *lo.max_mre <= 0.05, std::string(name) + " MRE " + mre_text(lo));
    v.require(hi.correct == 10, fmt("%s alpha 1.0: %zu/10", name, hi.correct));
  }
  return v;
}

Verdict alpha_max() {
  Verdict v;
  std::vector<double> grid;
  for (int i = 0; i <= 8; ++i) grid.push_back(0.25 * i);
  const auto rep = sweep("burgers1d", grid, 10);
  std::string counts;
  for (const auto& g : rep.aggregates) counts += fmt("%s%zu", counts.empty() ? "" : ",", g.correct);
  v.require(rep.alpha_max && *rep.alpha_max >= 1.0,
            rep.alpha_max ? fmt("alpha_max %.2f", *rep.alpha_max) : std::string("alpha_max none"));
  v.detail += " (correct per alpha " + counts + (rep.exceeds_grid ? ", exceeds grid)" : ")");
  return v;
}

Verdict two_d() {
  Verdict v;
  const auto b = sweep("burgers2d", {0.05}, 10);
  const auto& g = b.aggregates[0];
  v.require(g.correct == 10, fmt("burgers2d alpha 0.05: %zu/10", g.correct));
  v.require(g.max_mre && *g.max_mre <= 0.02, "MRE " + mre_text(g));
  const auto w = sweep("wave2d", {0.0}, 1);
  const auto& c = w.aggregates[0];
  v.require(c.correct == 1, "wave2d clean " + std::string(c.correct ? "correct" : "wrong"));
  v.require(c.mean_mre && *c.mean_mre <= 0.02, "MRE " + mre_text(c));
  return v;
}

Verdict three_d() {
  Verdict v;
  for (const char* name : {"burgers3d", "diffusion3d"}) {
    const auto rep = sweep(name, {1.0}, 5);
    const auto& g = rep.aggregates[0];
    v.require(g.correct == 5, fmt("%s alpha 1.0: %zu/5, MRE ", name, g.correct) + mre_text(g));
  }
  return v;
}

Verdict method_ordering() {
  Verdict v;
  CompareOptions o;
  o.alphas = {0.1, 0.5, 1.0};
  o.trials = 10;
  o.seed_base = kSeedBase;
  const auto truth = equation_spec("burgers1d");
  const auto rows = compare_methods(clean("burgers1d"), truth, default_config_for(1), o);
  const std::size_t nm = rows.size() / o.alphas.size();
  for (std::size_t a = 0; a < o.alphas.size(); ++a) {
    const MethodErrorRow* freq = nullptr;
    const MethodErrorRow* ts = nullptr;
    std::vector<const MethodErrorRow*> lowpass;
    for (std::size_t m = 0; m < nm; ++m) {
      const auto& r = rows[a * nm + m];
      if (r.method == "freq") freq = &r;
      else if (r.method == "timespace") ts = &r;
      else lowpass.push_back(&r);
    }
    for (const auto& t : truth.true_terms) {
      const auto name = t.term.name();
      for (const auto* lp : lowpass) {
        const double f = freq->mean_abs_error.at(name), l = lp->mean_abs_error.at(name),
                     s = ts->mean_abs_error.at(name);
        v.require(f < l && l < s, fmt("a=%.1f %s %s: freq %.2e, low-pass %.2e, timespace %.2e", o.alphas[a],
                                      name.c_str(), lp->method.c_str(), f, l, s));
      }
    }
  }
  return v;
}

Verdict selector_robustness() {
  Verdict v;
  SweepOptions o;
  o.alphas = {0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 0.75, 1, 1.5, 2};
  o.trials = 10;
  o.seed_base = kSeedBase;
  const auto rep = csr_vs_stlm(clean("burgers1d"), equation_spec("burgers1d"), default_config_for(1), o);
  const double csr = rep.csr_max_alpha.value_or(-1.0);
  const double st = rep.stlm_max_alpha.value_or(0.0);
  v.require(csr >= 0.0 && csr >= 10.0 * st,
            fmt("1-D max alpha: CSR %.2f%s, STLM %.2f", csr, rep.csr_exceeds_grid ? "+" : "", st));

  SweepOptions c;
  c.alphas = {0.0};
  c.trials = 1;
  const auto two = csr_vs_stlm(clean("burgers2d"), equation_spec("burgers2d"), default_config_for(2), c);
  v.require(two.rows[0].csr_correct == 1, std::string("2-D clean CSR ") + (two.rows[0].csr_correct ? "correct" : "wrong"));
  v.require(two.rows[0].stlm_correct == 0, std::string("STLM ") + (two.rows[0].stlm_correct ? "correct" : "wrong"));
  return v;
}

Verdict spectral_ordering() {
  Verdict v;
  const auto& f = clean("burgers1d");
  const auto noisy = inject_noise(f, {0.1, derive_seed(kSeedBase, 0, 0)});
  const auto p = spectral_error_profile(f, noisy, parse_term("u_xxx"), default_diff(1, true), default_cutoff(2));
  v.require(p.full < p.time_only && p.time_only < p.raw,
            fmt("full %.3g < time-only %.3g < raw %.3g", p.full, p.time_only, p.raw));
  return v;
}

Verdict property_suites() {
  Verdict v;
  const std::vector<std::string> bins = FDI_PROPERTY_BINARIES;
  const auto start = Clock::now();
  for (const auto& bin : bins) {
    const std::string cmd = "'" + bin + "' --test-suite=property --minimal > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const bool ok = status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    const auto slash = bin.find_last_of('/');
    v.require(ok, bin.substr(slash + 1) + (ok ? " ok" : " failed"));
  }
  const double secs = seconds_since(start);
  v.require(secs < 60.0, fmt("%.1f s total", secs));
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"clean burgers", clean_burgers},
      {"noisy burgers", noisy_burgers},
      {"ks and kdv", ks_kdv},
      {"burgers alpha_max", alpha_max},
      {"2-D burgers and wave", two_d},
      {"3-D desk scale", three_d},
      {"method ordering", method_ordering},
      {"selector robustness", selector_robustness},
      {"spectral error ordering", spectral_ordering},
      {"property suites", property_suites},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    failed += !v.pass;
    std::printf("criterion %zu %s: %s (%s) [%.1f s]\n", i + 1, criteria[i].first.c_str(), v.pass ? "PASS" : "FAIL",
                v.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
