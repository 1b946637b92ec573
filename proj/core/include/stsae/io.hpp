#pragma once

#include "stsae/estimators.hpp"
#include "stsae/graph.hpp"
#include "stsae/model.hpp"
#include "stsae/sampler.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stsae {

/// Area and year labels for model indices. Years map to t = 1..T in sorted order.
struct Labels {
  std::vector<std::string> area_ids;
  std::vector<long long> years;

  AreaIndex area_index() const;
};

struct InputData {
  Dataset dataset;
  Labels labels;
  std::vector<std::string> covariate_names;
  std::vector<int> svc_columns;  // 1-based covariate columns used as space-varying
};

/// Plots CSV: `area_id,year,value`. Covariates CSV: `area_id,year,<P columns>`,
/// one row per (area, year). Areas are sorted by identifier. `svc_selection`
/// names covariate columns by header name or 1-based position.
InputData load_dataset(const std::filesystem::path& plots, const std::filesystem::path& covariates,
                       const std::vector<std::string>& svc_selection);
InputData load_dataset(std::istream& plots, std::istream& covariates, const std::vector<std::string>& svc_selection,
                       const std::string& plots_name = "plots", const std::string& covariates_name = "covariates");

struct HyperOverrides {
  std::optional<double> a_sigma, b_sigma, a_eta, b_eta, a_omega, b_omega, nu_xi;
  std::optional<double> h_xi;    // H_ξ = h_xi · I
  std::optional<double> sigma0;  // Σ_0 = sigma0 · I
  std::optional<double> mu0;     // μ_0 = mu0 · 1
};

struct RunConfig {
  std::filesystem::path plots, covariates, adjacency, out_dir;
  std::vector<std::string> svc;
  McmcConfig mcmc;
  HyperOverrides hyper;
  int verbosity = 1;

  /// Applies one `key = value` setting. Throws InvalidConfig on unknown keys
  /// or bad values.
  void set(const std::string& key, const std::string& value);
  /// Resolved settings, one `key = value` per line in a fixed order; parsing
  /// this text reproduces the configuration.
  std::string canonical() const;
  Hyperparameters hyperparameters(int P, int Q, int T) const;
};

RunConfig parse_run_config(std::istream& in);
RunConfig read_run_config(const std::filesystem::path& path);

// Writers. Numbers use the shortest round-trip form, independent of locale.

void write_labels(const std::filesystem::path& dir, const Labels& labels);
Labels read_labels(const std::filesystem::path& dir);

void write_mu_summary(std::ostream& out, const PosteriorDraws& draws, const Labels& labels,
                      const std::vector<int>& counts);
void write_trend_summary(std::ostream& out, const PosteriorDraws& draws, const Labels& labels);
void write_direct_estimates(std::ostream& out, const DirectEstimates& direct, const Labels& labels);
void write_params_summary(std::ostream& out, const PosteriorDraws& draws, const Labels& labels);
void write_waic(std::ostream& out, const WaicReport& report);
void write_waic_pointwise(std::ostream& out, const WaicReport& report, const Dataset& data, const Labels& labels);
WaicReport read_waic_pointwise(const std::filesystem::path& path);
void write_metropolis(std::ostream& out, const std::vector<MetropolisStats>& stats);

/// Writes mu_summary.csv, trend_summary.csv (T >= 2), direct_estimates.csv and
/// params_summary.csv into `out_dir`. `counts` is n per cell (ti * J + j).
void write_summaries(const PosteriorDraws& draws, const DirectEstimates& direct, const Labels& labels,
                     const std::vector<int>& counts, const std::filesystem::path& out_dir);

/// Comparison table in the layout elpd / p_waic / waic / elpd_diff with standard errors.
void write_waic_comparison(std::ostream& out, const std::vector<std::string>& names,
                           const std::vector<WaicReport>& reports);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

struct FitOutputs {
  InputData input;
  FitResult fit;
  DirectEstimates direct;
  WaicReport waic;
};

/// Full pipeline: load inputs, fit, write every output file and the manifest.
FitOutputs run_fit(const RunConfig& config, std::ostream* log = nullptr);

/// Per-cell counts recovered from a fit directory's direct_estimates.csv.
std::vector<int> read_cell_counts(const std::filesystem::path& dir, const Labels& labels);

}  // namespace stsae
