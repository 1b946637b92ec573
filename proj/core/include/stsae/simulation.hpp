#pragma once

#include "stsae/estimators.hpp"
#include "stsae/model.hpp"
#include "stsae/rng.hpp"
#include "stsae/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stsae {

/// Synthetic population on a rows x cols lattice of square areas, each holding
/// units at fixed random locations. Unit value at year t:
///   max(0, intercept + tcc_effect * tcc + field(location) + drift_{j,t} + noise)
/// with a fixed fraction of units (zero_inflation) identically zero.
struct PopulationSpec {
  int rows = 4;
  int cols = 5;
  int num_times = 5;
  int units_per_area = 200;

  double intercept = 20.0;
  double tcc_effect = 1.0;
  double tcc_mean = 50.0;
  double tcc_area_sd = 15.0;   // between-area spread of canopy cover
  double tcc_unit_sd = 10.0;   // within-area spread
  double tcc_trend = 0.0;      // change per year

  double field_sd = 10.0;
  double field_scale = 1.5;    // correlation length in area widths
  int field_features = 64;

  double drift_sd = 3.0;
  double drift_ar = 0.7;

  double noise_sd = 20.0;
  double zero_inflation = 0.0;

  /// Number of space-varying covariates in generated datasets (0 or 1).
  int svc = 1;

  std::uint64_t seed = 1;

  int num_areas() const { return rows * cols; }
  /// Throws InvalidSpec.
  void validate() const;
};

struct SyntheticPopulation {
  PopulationSpec spec;
  int J = 0, T = 0;
  /// units[cell_index][unit] with cell_index = ti * J + j.
  std::vector<std::vector<double>> units;
  Eigen::MatrixXd true_mu;  // J x T
  Eigen::MatrixXd x;        // 2 x (J*T): intercept and mean canopy cover
  Eigen::MatrixXd x_svc;    // svc x (J*T)

  std::size_t cell_index(int j, int ti) const { return static_cast<std::size_t>(ti) * J + j; }
  AdjacencyGraph graph() const;
};

SyntheticPopulation generate_population(const PopulationSpec& spec, Rng& rng);

/// `intensity` is J x T. Simple random sample without replacement per cell.
Dataset draw_replicate(const SyntheticPopulation& pop, const Eigen::MatrixXi& intensity, Rng& rng);

struct CellEstimate {
  std::optional<double> estimate;
  std::optional<double> lower;
  std::optional<double> upper;
};

/// One estimator's results for every replicate: replicates[r][cell_index].
struct EstimatorRuns {
  std::string name;
  std::vector<std::vector<CellEstimate>> replicates;
};

struct CellScore {
  std::optional<double> bias;
  std::optional<double> rmse;
  std::optional<double> coverage;
  std::optional<double> width;
  int point_replicates = 0;     // replicates with a point estimate
  int interval_replicates = 0;  // replicates with an interval
  int excluded = 0;             // replicates with no point estimate
};

struct SimulationReport {
  int J = 0, T = 0, R = 0;
  std::vector<std::string> estimators;
  /// scores[e][cell_index]
  std::vector<std::vector<CellScore>> scores;
  /// Average sample size per cell over replicates.
  std::vector<double> mean_n;

  std::size_t cell_index(int j, int ti) const { return static_cast<std::size_t>(ti) * J + j; }
};

/// Bias, RMSE, coverage and width per cell; cells without a point estimate or
/// interval in a replicate are excluded from that metric and counted. Throws
/// NoValidReplicates if an estimator has no usable replicate in any cell.
SimulationReport score_estimators(const SyntheticPopulation& pop, const std::vector<EstimatorRuns>& runs,
                                  const std::vector<Eigen::MatrixXi>& sample_sizes);

std::vector<CellEstimate> direct_cell_estimates(const DirectEstimates& d);
std::vector<CellEstimate> model_cell_estimates(const PosteriorDraws& draws);

struct StudySpec {
  PopulationSpec population;
  int replicates = 30;
  /// Per-cell plot counts: a constant, a uniform draw in [min, max] fixed for
  /// the whole study, or a J x T counts CSV (area_index,time_index,n).
  std::optional<int> intensity_constant;
  int intensity_min = 0;
  int intensity_max = 5;
  std::filesystem::path intensity_file;
  McmcConfig mcmc;
  std::uint64_t seed = 1;
  /// Threads used across replicates.
  int workers = 1;

  void validate() const;
};

/// Parses a key = value study file with '#' comments. Throws InvalidSpec.
StudySpec parse_study_spec(std::istream& in);
StudySpec read_study_spec(const std::filesystem::path& path);

Eigen::MatrixXi study_intensity(const StudySpec& spec, const SyntheticPopulation& pop);

struct StudyResult {
  SyntheticPopulation population;
  Eigen::MatrixXi intensity;
  SimulationReport report;
};

/// generate -> per replicate: draw, fit the model, direct estimates -> score.
/// Replicate r uses seeds derived from spec.seed by counter.
StudyResult run_study(const StudySpec& spec);

void write_report_csv(std::ostream& out, const SimulationReport& report);

/// Cell metrics averaged within groups of cells that share an estimator and a
/// (rounded) mean sample size. Cells lacking a metric are left out of that average.
struct GroupSummary {
  std::string estimator;
  int n = 0;
  int cells = 0;
  std::optional<double> bias, rmse, coverage, width;
};

std::vector<GroupSummary> summarize_by_sample_size(const SimulationReport& report);
void write_group_summary_csv(std::ostream& out, const std::vector<GroupSummary>& groups);

}  // namespace stsae
