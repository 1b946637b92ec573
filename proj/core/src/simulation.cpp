#include "stsae/simulation.hpp"

#include "stsae/error.hpp"
#include "stsae/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <type_traits>

namespace stsae {

namespace {

void require_spec(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::InvalidSpec, message);
}

/// Stationary Gaussian field with squared-exponential covariance, approximated
/// by random Fourier features.
class FourierField {
 public:
  FourierField(int features, double scale, double sd, Rng& rng) : sd_(sd) {
    for (int k = 0; k < features; ++k) {
      omega_.push_back({rng.normal() / scale, rng.normal() / scale});
      phase_.push_back(2.0 * std::numbers::pi * rng.uniform());
    }
  }

  double operator()(double x, double y) const {
    if (omega_.empty() || sd_ == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < omega_.size(); ++k)
      acc += std::cos(omega_[k][0] * x + omega_[k][1] * y + phase_[k]);
    return sd_ * std::sqrt(2.0 / static_cast<double>(omega_.size())) * acc;
  }

 private:
  double sd_;
  std::vector<std::array<double, 2>> omega_;
  std::vector<double> phase_;
};

}  // namespace

void PopulationSpec::validate() const {
  require_spec(rows >= 1 && cols >= 1 && rows * cols >= 2, "the lattice needs at least two areas");
  require_spec(num_times >= 1, "years must be positive");
  require_spec(units_per_area >= 1, "units_per_area must be positive");
  require_spec(field_features >= 1, "field_features must be positive");
  for (double v : {intercept, tcc_effect, tcc_mean, tcc_trend})
    require_spec(std::isfinite(v), "population parameters must be finite");
  for (double v : {tcc_area_sd, tcc_unit_sd, field_sd, drift_sd, noise_sd})
    require_spec(std::isfinite(v) && v >= 0.0, "standard deviations must be non-negative");
  require_spec(field_scale > 0.0 && std::isfinite(field_scale), "field_scale must be positive");
  require_spec(drift_ar > -1.0 && drift_ar < 1.0, "drift_ar must lie in (-1, 1)");
  require_spec(zero_inflation >= 0.0 && zero_inflation < 1.0, "zero_inflation must lie in [0, 1)");
  require_spec(svc == 0 || svc == 1, "svc must be 0 or 1");
}

AdjacencyGraph SyntheticPopulation::graph() const { return lattice_graph(spec.rows, spec.cols); }

SyntheticPopulation generate_population(const PopulationSpec& spec, Rng& rng) {
  spec.validate();
  SyntheticPopulation pop;
  pop.spec = spec;
  pop.J = spec.num_areas();
  pop.T = spec.num_times;
  const int J = pop.J, T = pop.T, N = spec.units_per_area;
  const double t_mid = 0.5 * (T + 1);

  const FourierField field(spec.field_features, spec.field_scale, spec.field_sd, rng);
  const FourierField canopy(spec.field_features, spec.field_scale, spec.tcc_area_sd, rng);

  struct Unit {
    double x, y, tcc, level;
    bool zero;
  };
  std::vector<std::vector<Unit>> units(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    const int r = j / spec.cols, c = j % spec.cols;
    for (int i = 0; i < N; ++i) {
      Unit u{};
      u.x = c + rng.uniform();
      u.y = r + rng.uniform();
      u.tcc = spec.tcc_mean + canopy(c + 0.5, r + 0.5) + spec.tcc_unit_sd * rng.normal();
      u.level = field(u.x, u.y);
      u.zero = rng.uniform() < spec.zero_inflation;
      units[j].push_back(u);
    }
  }

  Eigen::MatrixXd drift(J, T);
  const double innovation = spec.drift_sd * std::sqrt(1.0 - spec.drift_ar * spec.drift_ar);
  for (int j = 0; j < J; ++j) {
    drift(j, 0) = spec.drift_sd * rng.normal();
    for (int ti = 1; ti < T; ++ti) drift(j, ti) = spec.drift_ar * drift(j, ti - 1) + innovation * rng.normal();
  }

  const auto cells = static_cast<std::size_t>(J) * T;
  pop.units.assign(cells, {});
  pop.true_mu.resize(J, T);
  pop.x = Eigen::MatrixXd::Ones(2, static_cast<Eigen::Index>(cells));
  for (int ti = 0; ti < T; ++ti)
    for (int j = 0; j < J; ++j) {
      auto& values = pop.units[pop.cell_index(j, ti)];
      values.reserve(N);
      double tcc_sum = 0.0;
      for (const Unit& u : units[j]) {
        const double tcc = std::clamp(u.tcc + spec.tcc_trend * (ti + 1 - t_mid), 0.0, 100.0);
        tcc_sum += tcc;
        double v = 0.0;
        if (!u.zero)
          v = std::max(0.0, spec.intercept + spec.tcc_effect * tcc + u.level + drift(j, ti) +
                                spec.noise_sd * rng.normal());
        values.push_back(v);
      }
      pop.true_mu(j, ti) = std::accumulate(values.begin(), values.end(), 0.0) / N;
      pop.x(1, static_cast<Eigen::Index>(pop.cell_index(j, ti))) = tcc_sum / N;
    }
  pop.x_svc = spec.svc == 1 ? Eigen::MatrixXd(pop.x.bottomRows(1)) : Eigen::MatrixXd(0, pop.x.cols());
  return pop;
}

Dataset draw_replicate(const SyntheticPopulation& pop, const Eigen::MatrixXi& intensity, Rng& rng) {
  if (intensity.rows() != pop.J || intensity.cols() != pop.T)
    fail(ErrorCode::DimensionMismatch, "intensity must be J x T");
  std::vector<Observation> obs;
  std::vector<int> index;
  for (int ti = 0; ti < pop.T; ++ti)
    for (int j = 0; j < pop.J; ++j) {
      const auto& units = pop.units[pop.cell_index(j, ti)];
      const int n = intensity(j, ti);
      if (n < 0 || n > static_cast<int>(units.size()))
        fail(ErrorCode::IntensityExceedsPopulation,
             "cell (area " + std::to_string(j) + ", time " + std::to_string(ti + 1) + ") requests " +
                 std::to_string(n) + " of " + std::to_string(units.size()) + " units");
      index.resize(units.size());
      std::iota(index.begin(), index.end(), 0);
      std::vector<int> picked;
      picked.reserve(n);
      std::sample(index.begin(), index.end(), std::back_inserter(picked), n, rng.engine());
      for (int i : picked) obs.push_back({j, ti, units[i]});
    }
  return Dataset(pop.J, pop.T, pop.x, pop.x_svc, std::move(obs));
}

std::vector<CellEstimate> direct_cell_estimates(const DirectEstimates& d) {
  std::vector<CellEstimate> out(d.mean.size());
  for (int ti = 0; ti < d.T; ++ti)
    for (int j = 0; j < d.J; ++j) {
      auto& e = out[d.index(j, ti)];
      e.estimate = d.mean[d.index(j, ti)];
      if (auto ci = d.interval(j, ti)) {
        e.lower = ci->first;
        e.upper = ci->second;
      }
    }
  return out;
}

std::vector<CellEstimate> model_cell_estimates(const PosteriorDraws& draws) {
  std::vector<CellEstimate> out(static_cast<std::size_t>(draws.J) * draws.T);
  std::vector<double> v(static_cast<std::size_t>(draws.retained));
  for (int ti = 0; ti < draws.T; ++ti)
    for (int j = 0; j < draws.J; ++j) {
      for (int s = 0; s < draws.retained; ++s) v[s] = draws.mu_at(s, j, ti);
      const DrawSummary sum = summarize_draws(v);
      out[static_cast<std::size_t>(ti) * draws.J + j] = {sum.mean, sum.q025, sum.q975};
    }
  return out;
}

SimulationReport score_estimators(const SyntheticPopulation& pop, const std::vector<EstimatorRuns>& runs,
                                  const std::vector<Eigen::MatrixXi>& sample_sizes) {
  SimulationReport rep;
  rep.J = pop.J;
  rep.T = pop.T;
  const auto cells = static_cast<std::size_t>(pop.J) * pop.T;
  if (runs.empty()) fail(ErrorCode::NoValidReplicates, "no estimator results to score");
  rep.R = static_cast<int>(runs.front().replicates.size());
  if (rep.R < 1) fail(ErrorCode::NoValidReplicates, "no replicates to score");

  rep.mean_n.assign(cells, 0.0);
  if (!sample_sizes.empty()) {
    for (const auto& n : sample_sizes)
      for (int ti = 0; ti < pop.T; ++ti)
        for (int j = 0; j < pop.J; ++j) rep.mean_n[rep.cell_index(j, ti)] += n(j, ti);
    for (double& m : rep.mean_n) m /= static_cast<double>(sample_sizes.size());
  }

  for (const auto& run : runs) {
    if (static_cast<int>(run.replicates.size()) != rep.R)
      fail(ErrorCode::MisalignedDraws, "estimator " + run.name + " has a different replicate count");
    rep.estimators.push_back(run.name);
    std::vector<CellScore> scores(cells);
    bool any = false;
    for (std::size_t c = 0; c < cells; ++c) {
      const double truth = pop.true_mu(static_cast<Eigen::Index>(c % pop.J), static_cast<Eigen::Index>(c / pop.J));
      double err = 0.0, sq = 0.0, cover = 0.0, width = 0.0;
      CellScore& s = scores[c];
      for (const auto& rep_cells : run.replicates) {
        if (rep_cells.size() != cells) fail(ErrorCode::MisalignedDraws, "replicate does not cover every cell");
        const CellEstimate& e = rep_cells[c];
        if (!e.estimate) {
          ++s.excluded;
          continue;
        }
        ++s.point_replicates;
        const double d = *e.estimate - truth;
        err += d;
        sq += d * d;
        if (e.lower && e.upper) {
          ++s.interval_replicates;
          cover += (*e.lower <= truth && truth <= *e.upper) ? 1.0 : 0.0;
          width += *e.upper - *e.lower;
        }
      }
      if (s.point_replicates > 0) {
        any = true;
        s.bias = err / s.point_replicates;
        s.rmse = std::sqrt(sq / s.point_replicates);
      }
      if (s.interval_replicates > 0) {
        s.coverage = cover / s.interval_replicates;
        s.width = width / s.interval_replicates;
      }
    }
    if (!any) fail(ErrorCode::NoValidReplicates, "estimator " + run.name + " produced no usable estimate in any cell");
    rep.scores.push_back(std::move(scores));
  }
  return rep;
}

void StudySpec::validate() const {
  population.validate();
  require_spec(replicates >= 1, "replicates must be positive");
  if (intensity_constant) require_spec(*intensity_constant >= 0, "intensity must be non-negative");
  require_spec(intensity_min >= 0 && intensity_min <= intensity_max, "intensity range is invalid");
  require_spec(workers >= 1, "workers must be positive");
  try {
    mcmc.validate();
  } catch (const Error& e) {
    fail(ErrorCode::InvalidSpec, e.what());
  }
}

StudySpec parse_study_spec(std::istream& in) {
  StudySpec spec;
  auto& p = spec.population;
  const auto kvs = parse_key_values(in, ErrorCode::InvalidSpec);
  for (const auto& kv : kvs) {
    const auto where = "line " + std::to_string(kv.line) + " (" + kv.key + ")";
    const auto real = [&](double& out) {
      if (!parse_double(kv.value, out)) fail(ErrorCode::InvalidSpec, where + ": expected a number");
    };
    const auto integer = [&](auto& out) {
      long long v = 0;
      if (!parse_int(kv.value, v)) fail(ErrorCode::InvalidSpec, where + ": expected an integer");
      out = static_cast<std::remove_reference_t<decltype(out)>>(v);
    };
    const auto seed = [&](std::uint64_t& out) {
      long long v = 0;
      if (!parse_int(kv.value, v) || v < 0) fail(ErrorCode::InvalidSpec, where + ": expected a non-negative seed");
      out = static_cast<std::uint64_t>(v);
    };
    const std::map<std::string, std::function<void()>> handlers = {
        {"rows", [&] { integer(p.rows); }},
        {"cols", [&] { integer(p.cols); }},
        {"years", [&] { integer(p.num_times); }},
        {"units_per_area", [&] { integer(p.units_per_area); }},
        {"intercept", [&] { real(p.intercept); }},
        {"tcc_effect", [&] { real(p.tcc_effect); }},
        {"tcc_mean", [&] { real(p.tcc_mean); }},
        {"tcc_area_sd", [&] { real(p.tcc_area_sd); }},
        {"tcc_unit_sd", [&] { real(p.tcc_unit_sd); }},
        {"tcc_trend", [&] { real(p.tcc_trend); }},
        {"field_sd", [&] { real(p.field_sd); }},
        {"field_scale", [&] { real(p.field_scale); }},
        {"field_features", [&] { integer(p.field_features); }},
        {"drift_sd", [&] { real(p.drift_sd); }},
        {"drift_ar", [&] { real(p.drift_ar); }},
        {"noise_sd", [&] { real(p.noise_sd); }},
        {"zero_inflation", [&] { real(p.zero_inflation); }},
        {"svc", [&] { integer(p.svc); }},
        {"population_seed", [&] { seed(p.seed); }},
        {"replicates", [&] { integer(spec.replicates); }},
        {"intensity",
         [&] {
           if (kv.value == "mixed") {
             spec.intensity_constant.reset();
           } else {
             int v = 0;
             integer(v);
             spec.intensity_constant = v;
           }
         }},
        {"intensity_min", [&] { integer(spec.intensity_min); }},
        {"intensity_max", [&] { integer(spec.intensity_max); }},
        {"intensity_file", [&] { spec.intensity_file = kv.value; }},
        {"iterations", [&] { integer(spec.mcmc.total_iterations); }},
        {"burn_in", [&] { integer(spec.mcmc.burn_in); }},
        {"thin", [&] { integer(spec.mcmc.thin); }},
        {"chains", [&] { integer(spec.mcmc.chains); }},
        {"sub_model", [&] { integer(spec.mcmc.sub_model); }},
        {"seed", [&] { seed(spec.seed); }},
        {"workers", [&] { integer(spec.workers); }},
    };
    const auto it = handlers.find(kv.key);
    if (it == handlers.end()) fail(ErrorCode::InvalidSpec, where + ": unknown key");
    it->second();
  }
  spec.validate();
  return spec;
}

StudySpec read_study_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open study spec " + path.string());
  return parse_study_spec(in);
}

Eigen::MatrixXi study_intensity(const StudySpec& spec, const SyntheticPopulation& pop) {
  Eigen::MatrixXi n(pop.J, pop.T);
  if (!spec.intensity_file.empty()) {
    std::ifstream in(spec.intensity_file);
    if (!in) fail(ErrorCode::IoError, "cannot open intensity file " + spec.intensity_file.string());
    n.setConstant(-1);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto s = trim(raw);
      if (s.empty() || s.front() == '#' || (line == 1 && !std::isdigit(static_cast<unsigned char>(s.front()))))
        continue;
      const auto f = split(s, ',');
      long long j = 0, t = 0, c = 0;
      if (f.size() != 3 || !parse_int(f[0], j) || !parse_int(f[1], t) || !parse_int(f[2], c))
        fail(ErrorCode::ParseError, spec.intensity_file.string() + ":" + std::to_string(line) +
                                        ": expected area_index,time_index,n");
      if (j < 0 || j >= pop.J || t < 1 || t > pop.T || c < 0)
        fail(ErrorCode::InvalidSpec, spec.intensity_file.string() + ":" + std::to_string(line) + ": out of range");
      n(static_cast<int>(j), static_cast<int>(t - 1)) = static_cast<int>(c);
    }
    if ((n.array() < 0).any()) fail(ErrorCode::InvalidSpec, "intensity file does not cover every cell");
  } else if (spec.intensity_constant) {
    n.setConstant(*spec.intensity_constant);
  } else {
    Rng rng(derive_seed(spec.seed, 0));
    std::uniform_int_distribution<int> pick(spec.intensity_min, spec.intensity_max);
    for (int ti = 0; ti < pop.T; ++ti)
      for (int j = 0; j < pop.J; ++j) n(j, ti) = pick(rng.engine());
  }
  return n;
}

StudyResult run_study(const StudySpec& spec) {
  spec.validate();
  StudyResult result;
  Rng pop_rng(spec.population.seed);
  result.population = generate_population(spec.population, pop_rng);
  const auto& pop = result.population;
  result.intensity = study_intensity(spec, pop);

  const CarEigenSystem spatial(pop.graph());
  const Hyperparameters hyper = Hyperparameters::defaults(1, spec.population.svc, pop.T);

  const int R = spec.replicates;
  EstimatorRuns model{"model", std::vector<std::vector<CellEstimate>>(R)};
  EstimatorRuns direct{"direct", std::vector<std::vector<CellEstimate>>(R)};
  std::vector<Eigen::MatrixXi> sizes(R, result.intensity);

  std::exception_ptr error;
  std::mutex error_mutex;
  const auto replicate = [&](int r) {
    try {
      Rng rng(derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(r) + 1));
      const Dataset data = draw_replicate(pop, result.intensity, rng);
      McmcConfig mcmc = spec.mcmc;
      mcmc.seed = derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(r) + 2);
      mcmc.workers = 1;
      const FitResult fit = fit_model(data, spatial, hyper, mcmc);
      model.replicates[r] = model_cell_estimates(fit.draws);
      direct.replicates[r] = direct_cell_estimates(direct_estimates(data));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  const int workers = std::min(spec.workers, R);
  if (workers <= 1) {
    for (int r = 0; r < R && !error; ++r) replicate(r);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int r = w; r < R; r += workers) replicate(r);
      });
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  result.report = score_estimators(pop, {model, direct}, sizes);
  return result;
}

void write_report_csv(std::ostream& out, const SimulationReport& report) {
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  out << "area_index,time_index,estimator,mean_n,bias,rmse,coverage,width,point_replicates,interval_replicates,"
         "excluded\n";
  for (std::size_t e = 0; e < report.estimators.size(); ++e)
    for (int ti = 0; ti < report.T; ++ti)
      for (int j = 0; j < report.J; ++j) {
        const auto c = report.cell_index(j, ti);
        const CellScore& s = report.scores[e][c];
        out << j << ',' << ti + 1 << ',' << report.estimators[e] << ',' << format_double(report.mean_n[c]) << ','
            << opt(s.bias) << ',' << opt(s.rmse) << ',' << opt(s.coverage) << ',' << opt(s.width) << ','
            << s.point_replicates << ',' << s.interval_replicates << ',' << s.excluded << '\n';
      }
}

std::vector<GroupSummary> summarize_by_sample_size(const SimulationReport& report) {
  std::vector<GroupSummary> out;
  for (std::size_t e = 0; e < report.estimators.size(); ++e) {
    struct Acc {
      int cells = 0;
      double sum[4] = {0, 0, 0, 0};
      int count[4] = {0, 0, 0, 0};
    };
    std::map<int, Acc> groups;
    for (std::size_t c = 0; c < report.scores[e].size(); ++c) {
      const CellScore& s = report.scores[e][c];
      Acc& a = groups[static_cast<int>(std::lround(report.mean_n[c]))];
      ++a.cells;
      const std::optional<double>* metrics[4] = {&s.bias, &s.rmse, &s.coverage, &s.width};
      for (int m = 0; m < 4; ++m)
        if (*metrics[m]) {
          a.sum[m] += **metrics[m];
          ++a.count[m];
        }
    }
    for (const auto& [n, a] : groups) {
      GroupSummary g;
      g.estimator = report.estimators[e];
      g.n = n;
      g.cells = a.cells;
      std::optional<double>* metrics[4] = {&g.bias, &g.rmse, &g.coverage, &g.width};
      for (int m = 0; m < 4; ++m)
        if (a.count[m] > 0) *metrics[m] = a.sum[m] / a.count[m];
      out.push_back(std::move(g));
    }
  }
  return out;
}

void write_group_summary_csv(std::ostream& out, const std::vector<GroupSummary>& groups) {
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  out << "estimator,n,cells,bias,rmse,coverage,width\n";
  for (const auto& g : groups)
    out << g.estimator << ',' << g.n << ',' << g.cells << ',' << opt(g.bias) << ',' << opt(g.rmse) << ','
        << opt(g.coverage) << ',' << opt(g.width) << '\n';
}

}  // namespace stsae
