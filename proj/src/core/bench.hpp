#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "field.hpp"
#include "ident.hpp"
#include "synth.hpp"

namespace fdi {

/// True iff the selected terms are exactly the truth's support.
bool structure_correct(const IdentResult& result, const EquationSpec& truth);

/// Mean over true terms of |estimate - truth| / |truth|. Throws when the
/// structure is wrong.
double mean_relative_error(const IdentResult& result, const EquationSpec& truth);

/// Pipeline used at a given noise level; lets clean and noisy runs differ.
using ConfigForAlpha = std::function<PipelineConfig(double alpha)>;

/// default_pipeline(spatial_dims, alpha > 0) for every alpha.
ConfigForAlpha default_config_for(std::size_t spatial_dims);

struct TrialOutcome {
  double alpha = 0.0;
  std::size_t alpha_index = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool structure_correct = false;
  std::optional<double> mre;                   // present iff structure_correct
  std::map<std::string, double> coefficients;  // selected terms
  std::map<std::string, double> term_errors;   // relative, true terms that were selected
  std::vector<std::string> selected;
  std::optional<std::string> error;            // failed trial

  nlohmann::json to_json() const;
  static TrialOutcome from_json(const nlohmann::json& j);
};

/// Noise level `alpha`, trial seed derived from (base, alpha index, trial),
/// identification and scoring against the truth. Errors are recorded in the
/// outcome instead of thrown.
TrialOutcome run_trial(const Field& clean, const EquationSpec& truth, const PipelineConfig& cfg,
                       double alpha, std::size_t alpha_index, std::size_t trial, std::uint64_t seed_base);

struct AlphaAggregate {
  double alpha = 0.0;
  std::size_t trials = 0;
  std::size_t correct = 0;
  std::size_t failed = 0;
  std::optional<double> mean_mre;  // over correct trials
  std::optional<double> max_mre;
  std::map<std::string, double> mean_term_error;
};

struct SweepReport {
  std::string equation;
  std::vector<double> alphas;
  std::size_t trials = 0;
  std::uint64_t seed_base = 0;
  std::vector<TrialOutcome> outcomes;  // alpha-major, trial-minor
  std::vector<AlphaAggregate> aggregates;
  /// Largest alpha such that it and every smaller tested alpha had all
  /// trials correct. Empty when the first alpha already fails.
  std::optional<double> alpha_max;
  bool exceeds_grid = false;  // every tested alpha was fully correct

  nlohmann::json to_json() const;
};

std::vector<AlphaAggregate> aggregate(const std::vector<TrialOutcome>& outcomes,
                                      const std::vector<double>& alphas, const EquationSpec& truth);

/// Prefix rule shared by sweeps and selector comparisons.
std::optional<double> max_correct_alpha(const std::vector<double>& alphas,
                                        const std::vector<std::size_t>& correct, std::size_t trials,
                                        bool* exceeds_grid = nullptr);

struct SweepOptions {
  std::vector<double> alphas;
  std::size_t trials = 10;
  std::uint64_t seed_base = 0;
  std::size_t jobs = 1;
  /// JSON-lines record of finished trials; existing records with matching
  /// alpha, trial and seed are reused, new ones appended.
  std::optional<std::filesystem::path> journal;
};

SweepReport alpha_sweep(const Field& clean, const EquationSpec& truth, const ConfigForAlpha& config,
                        const SweepOptions& opts);

void write_sweep_csv(const SweepReport& report, const EquationSpec& truth, const std::filesystem::path& path);

/// Known-structure parameter errors per domain.
struct MethodVariant {
  std::string label;  // "freq", "timespace", "lowpass_K..."
  Domain domain = Domain::freq;
  std::optional<CutoffSpec> cutoff;
};

/// freq at the default cutoff, timespace, and the low-pass baseline at a low
/// and a high cutoff (1/16 and 1/8 of each axis length).
std::vector<MethodVariant> default_method_variants(const std::vector<std::size_t>& dims);

struct MethodErrorRow {
  double alpha = 0.0;
  std::string method;
  std::size_t trials = 0;
  std::size_t failed = 0;
  std::map<std::string, double> mean_abs_error;  // per true term
};

struct CompareOptions {
  std::vector<double> alphas;
  std::size_t trials = 10;
  std::uint64_t seed_base = 0;
  std::size_t jobs = 1;
  std::vector<MethodVariant> methods;  // empty: default_method_variants
};

std::vector<MethodErrorRow> compare_methods(const Field& clean, const EquationSpec& truth,
                                            const ConfigForAlpha& config, const CompareOptions& opts);

void write_compare_csv(const std::vector<MethodErrorRow>& rows, const EquationSpec& truth,
                       const std::filesystem::path& path);

struct SelectorRow {
  double alpha = 0.0;
  std::size_t trials = 0;
  std::size_t csr_correct = 0;
  std::size_t stlm_correct = 0;
};

struct SelectorReport {
  std::vector<SelectorRow> rows;
  std::optional<double> csr_max_alpha;
  std::optional<double> stlm_max_alpha;
  bool csr_exceeds_grid = false;
  bool stlm_exceeds_grid = false;

  nlohmann::json to_json() const;
};

/// Both selectors on the identical frequency system per trial: CSR keeps the
/// k largest rates, STLM deletes down to k, k = number of true terms.
SelectorReport csr_vs_stlm(const Field& clean, const EquationSpec& truth, const ConfigForAlpha& config,
                           const SweepOptions& opts);

void write_selector_csv(const SelectorReport& report, const std::filesystem::path& path);

}  // namespace fdi
