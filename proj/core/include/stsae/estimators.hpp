#pragma once

#include "stsae/model.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace stsae {

enum class MissingReason { None, NoPlots, OnePlot, AllIdentical };

std::string_view to_string(MissingReason reason);

/// Design-based per-cell estimates, indexed by cell_index(j, ti) = ti * J + j.
struct DirectEstimates {
  int J = 0, T = 0;
  std::vector<int> n;
  std::vector<std::optional<double>> mean;
  std::vector<std::optional<double>> variance;
  /// Σ(y - ȳ)² / (n(n - 1)) whenever n >= 2, kept even when `variance` is
  /// withheld because every value is identical.
  std::vector<std::optional<double>> raw_variance;
  std::vector<MissingReason> reason;

  std::size_t index(int j, int ti) const { return static_cast<std::size_t>(ti) * J + j; }
  /// mean ± z·sqrt(variance), or nothing when the variance is missing.
  std::optional<std::pair<double, double>> interval(int j, int ti, double z = 1.96) const;
};

DirectEstimates direct_estimates(const Dataset& data);

/// Linear interpolation between order statistics (R type 7). `sorted` must be
/// ascending and non-empty; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> values, double p);

struct DrawSummary {
  double mean = 0.0;
  double sd = 0.0;  // S - 1 denominator, 0 for a single draw
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
};

DrawSummary summarize_draws(std::vector<double> values);

/// Per draw and area, the OLS slope of μ on t = 1..T. Input is [S][J][T],
/// output [S][J]. Throws DegenerateTime when T < 2.
std::vector<double> trend_draws(std::span<const double> mu, int S, int J, int T);
std::vector<double> trend_draws(const PosteriorDraws& draws);

struct TrendSummary {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool significant = false;
};

/// Equal-tailed interval per area from [S][J] slope draws; significant when
/// the interval excludes zero.
std::vector<TrendSummary> significant_trends(std::span<const double> theta, int S, int J, double level = 0.95);

struct EstimateWithSe {
  double estimate = 0.0;
  double se = 0.0;
};

/// Pointwise unit is one plot observation, in Dataset::observations() order.
struct WaicReport {
  EstimateWithSe elpd_waic;
  EstimateWithSe p_waic;
  EstimateWithSe waic;
  std::vector<double> pointwise_elpd;
  std::vector<double> pointwise_p;

  std::size_t size() const { return pointwise_elpd.size(); }
};

/// `mu` is [S][J][T], `sigma_sq` is [S][T].
WaicReport waic(const Dataset& data, std::span<const double> mu, std::span<const double> sigma_sq, int S);
WaicReport waic(const Dataset& data, const PosteriorDraws& draws);

/// Builds a report from stored pointwise contributions.
WaicReport waic_from_pointwise(std::vector<double> pointwise_elpd, std::vector<double> pointwise_p);

/// elpd(model) - elpd(reference) with the paired standard error
/// sqrt(N · var_i(elpd_i^model - elpd_i^reference)).
EstimateWithSe elpd_difference(const WaicReport& model, const WaicReport& reference);

}  // namespace stsae
