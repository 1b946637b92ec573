#include "cli.hpp"

#include "stsae/error.hpp"
#include "stsae/estimators.hpp"
#include "stsae/io.hpp"
#include "stsae/simulation.hpp"
#include "stsae/text.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>

namespace stsae {

namespace {

namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code(ErrorCode code) {
  switch (category(code)) {
    case ErrorCategory::Usage: return kExitUsage;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
  }
  return kExitData;
}

std::ostringstream classic() {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  return s;
}

PosteriorDraws load_draws(const fs::path& dir) {
  std::ifstream in(dir / "draws.bin", std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + (dir / "draws.bin").string());
  return read_draws(in);
}

struct FitArgs {
  std::string config;
  std::string plots, covariates, adjacency, out;
  std::vector<std::string> svc;
  std::optional<long long> seed;
  std::optional<int> iterations, burn_in, thin, chains, workers;
  bool sub_model = false;
  bool quiet = false;
};

RunConfig resolve(const FitArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : read_run_config(a.config);
  if (!a.plots.empty()) cfg.plots = a.plots;
  if (!a.covariates.empty()) cfg.covariates = a.covariates;
  if (!a.adjacency.empty()) cfg.adjacency = a.adjacency;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (!a.svc.empty()) cfg.svc = a.svc;
  if (a.seed) {
    if (*a.seed < 0) fail(ErrorCode::InvalidConfig, "seed must be non-negative");
    cfg.mcmc.seed = static_cast<std::uint64_t>(*a.seed);
  }
  if (a.iterations) cfg.mcmc.total_iterations = *a.iterations;
  if (a.burn_in) cfg.mcmc.burn_in = *a.burn_in;
  if (a.thin) cfg.mcmc.thin = *a.thin;
  if (a.chains) cfg.mcmc.chains = *a.chains;
  if (a.workers) cfg.mcmc.workers = *a.workers;
  if (a.sub_model) cfg.mcmc.sub_model = true;
  if (a.quiet) cfg.verbosity = 0;
  return cfg;
}

void print_trends(std::ostream& out, const PosteriorDraws& draws, const Labels& labels) {
  auto s = classic();
  write_trend_summary(s, draws, labels);
  out << s.str();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian spatio-temporal small area estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stsae 0.1.0");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model and write posterior summaries");
  fit_cmd->add_option("--config", fit.config, "Key-value configuration file");
  fit_cmd->add_option("--plots", fit.plots, "Plot CSV (area_id,year,value)");
  fit_cmd->add_option("--cov", fit.covariates, "Covariate CSV (area_id,year,cov...)");
  fit_cmd->add_option("--adj", fit.adjacency, "Adjacency edge list");
  fit_cmd->add_option("--out", fit.out, "Output directory");
  fit_cmd->add_option("--svc", fit.svc, "Space-varying covariates (names or 1-based columns)")->delimiter(',');
  fit_cmd->add_option("--seed", fit.seed, "Master seed");
  fit_cmd->add_option("--iterations", fit.iterations, "Total MCMC iterations");
  fit_cmd->add_option("--burn-in", fit.burn_in, "Burn-in iterations");
  fit_cmd->add_option("--thin", fit.thin, "Thinning interval");
  fit_cmd->add_option("--chains", fit.chains, "Number of chains");
  fit_cmd->add_option("--workers", fit.workers, "Threads for running chains");
  fit_cmd->add_flag("--sub-model", fit.sub_model, "Drop the space-varying regression term");
  fit_cmd->add_flag("--quiet", fit.quiet, "Suppress progress messages");

  std::string d_plots, d_cov, d_out;
  auto* direct_cmd = app.add_subcommand("direct", "Design-based direct estimates");
  direct_cmd->add_option("--plots", d_plots, "Plot CSV")->required();
  direct_cmd->add_option("--cov", d_cov, "Covariate CSV")->required();
  direct_cmd->add_option("--out", d_out, "Output directory (prints to stdout when omitted)");

  std::string t_dir, t_out;
  double t_level = 0.95;
  auto* trend_cmd = app.add_subcommand("trend", "Trend summaries from a saved fit");
  trend_cmd->add_option("fit_dir", t_dir, "Fit output directory")->required();
  trend_cmd->add_option("--level", t_level, "Credible level")->check(CLI::Range(0.0, 1.0));
  trend_cmd->add_option("--out", t_out, "Output CSV (prints to stdout when omitted)");

  std::vector<std::string> w_dirs, w_names;
  auto* waic_cmd = app.add_subcommand("waic-compare", "Compare saved fits by WAIC; the first is the reference");
  waic_cmd->add_option("fit_dirs", w_dirs, "Two or more fit output directories")->required()->expected(2, -1);
  waic_cmd->add_option("--names", w_names, "Model names")->delimiter(',');

  std::string s_spec, s_out;
  std::optional<long long> s_seed;
  std::optional<int> s_workers, s_replicates;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study");
  sim_cmd->add_option("--spec", s_spec, "Study spec file")->required();
  sim_cmd->add_option("--out", s_out, "Output directory")->required();
  sim_cmd->add_option("--seed", s_seed, "Override the study seed");
  sim_cmd->add_option("--replicates", s_replicates, "Override the replicate count");
  sim_cmd->add_option("--workers", s_workers, "Threads across replicates");

  std::string m_dir, m_out;
  auto* sum_cmd = app.add_subcommand("summarize", "Rewrite summaries from a saved fit");
  sum_cmd->add_option("fit_dir", m_dir, "Fit output directory")->required();
  sum_cmd->add_option("--out", m_out, "Output directory (defaults to fit_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit_cmd) {
      const RunConfig cfg = resolve(fit);
      const FitOutputs res = run_fit(cfg, &err);
      auto s = classic();
      write_waic(s, res.waic);
      out << s.str();
    } else if (*direct_cmd) {
      const InputData input = load_dataset(d_plots, d_cov, {});
      const DirectEstimates d = direct_estimates(input.dataset);
      auto s = classic();
      write_direct_estimates(s, d, input.labels);
      if (d_out.empty()) {
        out << s.str();
      } else {
        fs::create_directories(d_out);
        write_text_file(fs::path(d_out) / "direct_estimates.csv", s.str());
        write_labels(d_out, input.labels);
      }
    } else if (*trend_cmd) {
      const PosteriorDraws draws = load_draws(t_dir);
      const Labels labels = read_labels(t_dir);
      const std::vector<double> theta = draws.theta.empty() ? trend_draws(draws) : draws.theta;
      const auto summary = significant_trends(theta, draws.retained, draws.J, t_level);
      auto s = classic();
      s << "area_id,mean,lower,upper,significant\n";
      for (int j = 0; j < draws.J; ++j)
        s << labels.area_ids[j] << ',' << format_double(summary[j].mean) << ',' << format_double(summary[j].lower)
          << ',' << format_double(summary[j].upper) << ',' << (summary[j].significant ? "true" : "false") << '\n';
      if (t_out.empty()) out << s.str();
      else write_text_file(t_out, s.str());
    } else if (*waic_cmd) {
      if (!w_names.empty() && w_names.size() != w_dirs.size())
        fail(ErrorCode::InvalidConfig, "--names needs one name per fit directory");
      std::vector<WaicReport> reports;
      std::vector<std::string> names;
      for (std::size_t i = 0; i < w_dirs.size(); ++i) {
        reports.push_back(read_waic_pointwise(fs::path(w_dirs[i]) / "waic_pointwise.csv"));
        names.push_back(w_names.empty() ? fs::path(w_dirs[i]).filename().string() : w_names[i]);
        if (names.back().empty()) names.back() = fs::path(w_dirs[i]).parent_path().filename().string();
      }
      auto s = classic();
      write_waic_comparison(s, names, reports);
      out << s.str();
    } else if (*sim_cmd) {
      StudySpec spec = read_study_spec(s_spec);
      if (s_seed) {
        if (*s_seed < 0) fail(ErrorCode::InvalidConfig, "seed must be non-negative");
        spec.seed = static_cast<std::uint64_t>(*s_seed);
      }
      if (s_replicates) spec.replicates = *s_replicates;
      if (s_workers) spec.workers = *s_workers;
      const StudyResult result = run_study(spec);
      fs::create_directories(s_out);
      {
        auto s = classic();
        write_report_csv(s, result.report);
        write_text_file(fs::path(s_out) / "simulation_report.csv", s.str());
      }
      auto s = classic();
      write_group_summary_csv(s, summarize_by_sample_size(result.report));
      write_text_file(fs::path(s_out) / "simulation_summary.csv", s.str());
      out << s.str();
      auto truth = classic();
      truth << "area_index,time_index,true_mu,n\n";
      for (int ti = 0; ti < result.population.T; ++ti)
        for (int j = 0; j < result.population.J; ++j)
          truth << j << ',' << ti + 1 << ',' << format_double(result.population.true_mu(j, ti)) << ','
                << result.intensity(j, ti) << '\n';
      write_text_file(fs::path(s_out) / "true_mu.csv", truth.str());
    } else if (*sum_cmd) {
      const PosteriorDraws draws = load_draws(m_dir);
      const Labels labels = read_labels(m_dir);
      const std::vector<int> counts = read_cell_counts(m_dir, labels);
      const fs::path dest = m_out.empty() ? fs::path(m_dir) : fs::path(m_out);
      fs::create_directories(dest);
      {
        auto s = classic();
        write_mu_summary(s, draws, labels, counts);
        write_text_file(dest / "mu_summary.csv", s.str());
      }
      {
        auto s = classic();
        write_params_summary(s, draws, labels);
        write_text_file(dest / "params_summary.csv", s.str());
        out << s.str();
      }
      if (draws.T >= 2) {
        auto s = classic();
        print_trends(s, draws, labels);
        write_text_file(dest / "trend_summary.csv", s.str());
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}

}  // namespace stsae
