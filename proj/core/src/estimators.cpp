#include "stsae/estimators.hpp"

#include "stsae/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace stsae {

namespace {

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double sum_se(std::span<const double> pointwise) {
  return std::sqrt(static_cast<double>(pointwise.size()) * sample_variance(pointwise));
}

}  // namespace

std::string_view to_string(MissingReason reason) {
  switch (reason) {
    case MissingReason::None: return "";
    case MissingReason::NoPlots: return "NoPlots";
    case MissingReason::OnePlot: return "OnePlot";
    case MissingReason::AllIdentical: return "AllIdentical";
  }
  return "";
}

std::optional<std::pair<double, double>> DirectEstimates::interval(int j, int ti, double z) const {
  const auto i = index(j, ti);
  if (!mean[i] || !variance[i]) return std::nullopt;
  const double half = z * std::sqrt(*variance[i]);
  return std::pair{*mean[i] - half, *mean[i] + half};
}

DirectEstimates direct_estimates(const Dataset& data) {
  DirectEstimates out;
  out.J = data.num_areas();
  out.T = data.num_times();
  const auto cells = static_cast<std::size_t>(out.J) * out.T;
  out.n.assign(cells, 0);
  out.mean.assign(cells, std::nullopt);
  out.variance.assign(cells, std::nullopt);
  out.raw_variance.assign(cells, std::nullopt);
  out.reason.assign(cells, MissingReason::None);

  for (int ti = 0; ti < out.T; ++ti)
    for (int j = 0; j < out.J; ++j) {
      const auto i = out.index(j, ti);
      const auto y = data.values(j, ti);
      const auto n = static_cast<int>(y.size());
      out.n[i] = n;
      if (n == 0) {
        out.reason[i] = MissingReason::NoPlots;
        continue;
      }
      const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
      out.mean[i] = mean;
      if (n == 1) {
        out.reason[i] = MissingReason::OnePlot;
        continue;
      }
      double ss = 0.0;
      for (double v : y) ss += (v - mean) * (v - mean);
      const double var = ss / (static_cast<double>(n) * (n - 1));
      out.raw_variance[i] = var;
      if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
        out.reason[i] = MissingReason::AllIdentical;
      else
        out.variance[i] = var;
    }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorCode::DimensionMismatch, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

DrawSummary summarize_draws(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::DimensionMismatch, "summary of an empty sample");
  DrawSummary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.sd = std::sqrt(sample_variance(values));
  std::sort(values.begin(), values.end());
  s.q025 = quantile_sorted(values, 0.025);
  s.q500 = quantile_sorted(values, 0.5);
  s.q975 = quantile_sorted(values, 0.975);
  return s;
}

std::vector<double> trend_draws(std::span<const double> mu, int S, int J, int T) {
  if (T < 2) fail(ErrorCode::DegenerateTime, "trends need at least two time points");
  if (mu.size() != static_cast<std::size_t>(S) * J * T)
    fail(ErrorCode::MisalignedDraws, "mu draws do not match S x J x T");
  const double t_bar = 0.5 * (T + 1);
  double sxx = 0.0;
  for (int t = 1; t <= T; ++t) sxx += (t - t_bar) * (t - t_bar);
  std::vector<double> theta(static_cast<std::size_t>(S) * J);
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < J; ++j) {
      const double* row = mu.data() + (static_cast<std::size_t>(s) * J + j) * T;
      const double m = std::accumulate(row, row + T, 0.0) / T;
      double sxy = 0.0;
      for (int t = 1; t <= T; ++t) sxy += (t - t_bar) * (row[t - 1] - m);
      theta[static_cast<std::size_t>(s) * J + j] = sxy / sxx;
    }
  return theta;
}

std::vector<double> trend_draws(const PosteriorDraws& draws) {
  return trend_draws(draws.mu, draws.retained, draws.J, draws.T);
}

std::vector<TrendSummary> significant_trends(std::span<const double> theta, int S, int J, double level) {
  if (S < 1 || theta.size() != static_cast<std::size_t>(S) * J)
    fail(ErrorCode::MisalignedDraws, "theta draws do not match S x J");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCode::InvalidConfig, "credible level must lie in (0, 1)");
  const double tail = 0.5 * (1.0 - level);
  std::vector<TrendSummary> out(static_cast<std::size_t>(J));
  std::vector<double> col(static_cast<std::size_t>(S));
  for (int j = 0; j < J; ++j) {
    for (int s = 0; s < S; ++s) col[s] = theta[static_cast<std::size_t>(s) * J + j];
    auto& o = out[j];
    o.mean = std::accumulate(col.begin(), col.end(), 0.0) / S;
    std::sort(col.begin(), col.end());
    o.lower = quantile_sorted(col, tail);
    o.upper = quantile_sorted(col, 1.0 - tail);
    o.significant = o.lower > 0.0 || o.upper < 0.0;
  }
  return out;
}

WaicReport waic(const Dataset& data, std::span<const double> mu, std::span<const double> sigma_sq, int S) {
  const int J = data.num_areas(), T = data.num_times();
  if (S < 1 || mu.size() != static_cast<std::size_t>(S) * J * T ||
      sigma_sq.size() != static_cast<std::size_t>(S) * T)
    fail(ErrorCode::MisalignedDraws, "draws do not match the dataset dimensions");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  const auto& obs = data.observations();
  std::vector<double> elpd(obs.size()), p(obs.size()), ll(static_cast<std::size_t>(S));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    for (int s = 0; s < S; ++s) {
      const double m = mu[(static_cast<std::size_t>(s) * J + o.area) * T + o.time];
      const double v = sigma_sq[static_cast<std::size_t>(s) * T + o.time];
      const double r = o.value - m;
      ll[s] = -0.5 * (log_2pi + std::log(v) + r * r / v);
    }
    const double mx = *std::max_element(ll.begin(), ll.end());
    double acc = 0.0;
    for (double l : ll) acc += std::exp(l - mx);
    const double lppd = mx + std::log(acc / S);
    p[i] = sample_variance(ll);
    elpd[i] = lppd - p[i];
  }
  return waic_from_pointwise(std::move(elpd), std::move(p));
}

WaicReport waic(const Dataset& data, const PosteriorDraws& draws) {
  if (draws.J != data.num_areas() || draws.T != data.num_times())
    fail(ErrorCode::MisalignedDraws, "draws were produced for a different dataset shape");
  return waic(data, draws.mu, draws.sigma_sq, draws.retained);
}

WaicReport waic_from_pointwise(std::vector<double> pointwise_elpd, std::vector<double> pointwise_p) {
  if (pointwise_elpd.size() != pointwise_p.size())
    fail(ErrorCode::MisalignedDraws, "pointwise elpd and p_waic lengths differ");
  WaicReport r;
  r.elpd_waic.estimate = std::accumulate(pointwise_elpd.begin(), pointwise_elpd.end(), 0.0);
  r.elpd_waic.se = sum_se(pointwise_elpd);
  r.p_waic.estimate = std::accumulate(pointwise_p.begin(), pointwise_p.end(), 0.0);
  r.p_waic.se = sum_se(pointwise_p);
  r.waic.estimate = -2.0 * r.elpd_waic.estimate;
  r.waic.se = 2.0 * r.elpd_waic.se;
  r.pointwise_elpd = std::move(pointwise_elpd);
  r.pointwise_p = std::move(pointwise_p);
  return r;
}

EstimateWithSe elpd_difference(const WaicReport& model, const WaicReport& reference) {
  if (model.size() != reference.size())
    fail(ErrorCode::MisalignedDraws, "WAIC reports cover different observations");
  std::vector<double> diff(model.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = model.pointwise_elpd[i] - reference.pointwise_elpd[i];
  return {std::accumulate(diff.begin(), diff.end(), 0.0), sum_se(diff)};
}

}  // namespace stsae
