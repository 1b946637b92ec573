#include "stsae/io.hpp"

#include "stsae/error.hpp"
#include "stsae/text.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <fstream>
#include <locale>
#include <map>
#include <set>
#include <sstream>

namespace stsae {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) { return format_double(v); }

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); }

std::ostringstream classic_stream() {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  return out;
}

struct CsvRow {
  int line = 0;
  std::vector<std::string_view> fields;
};

/// Reads a headered comma-separated file into rows of fields. `storage` keeps
/// the lines alive for the returned views.
std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string s;
  while (std::getline(in, s)) lines.push_back(std::move(s));
  return lines;
}

std::vector<std::string_view> fields_of(std::string_view line) {
  auto f = split(line, ',');
  for (auto& x : f) {
    x = trim(x);
    if (x.size() >= 2 && x.front() == '"' && x.back() == '"') x = x.substr(1, x.size() - 2);
  }
  return f;
}

std::vector<CsvRow> parse_csv(const std::vector<std::string>& lines, const std::string& name,
                              std::vector<std::string>& header) {
  std::vector<CsvRow> rows;
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto body = trim(lines[i]);
    if (body.empty()) continue;
    auto f = fields_of(body);
    if (!have_header) {
      header.assign(f.begin(), f.end());
      have_header = true;
      continue;
    }
    if (f.size() != header.size())
      fail(ErrorCode::ParseError, name + ":" + std::to_string(i + 1) + ": expected " + std::to_string(header.size()) +
                                      " columns, found " + std::to_string(f.size()));
    rows.push_back({static_cast<int>(i + 1), std::move(f)});
  }
  if (!have_header) fail(ErrorCode::ParseError, name + ": file is empty");
  return rows;
}

double numeric(const CsvRow& row, std::size_t col, const std::vector<std::string>& header, const std::string& name) {
  double v = 0.0;
  if (!parse_double(row.fields[col], v))
    fail(ErrorCode::NonNumeric, name + ":" + std::to_string(row.line) + ": column '" + header[col] + "' value '" +
                                    std::string(row.fields[col]) + "' is not a finite number");
  return v;
}

long long year_of(const CsvRow& row, const std::vector<std::string>& header, const std::string& name) {
  long long y = 0;
  if (!parse_int(row.fields[1], y))
    fail(ErrorCode::NonNumeric, name + ":" + std::to_string(row.line) + ": column '" + header[1] + "' value '" +
                                    std::string(row.fields[1]) + "' is not an integer year");
  return y;
}

void require_header_prefix(const std::vector<std::string>& header, const std::vector<std::string>& want,
                           const std::string& name) {
  bool ok = header.size() >= want.size();
  for (std::size_t i = 0; ok && i < want.size(); ++i) ok = header[i] == want[i];
  if (!ok) {
    std::string joined;
    for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
    fail(ErrorCode::ParseError, name + ":1: header must start with " + joined);
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  for (auto f : split(value, ','))
    if (!trim(f).empty()) out.emplace_back(trim(f));
  return out;
}

std::string cell_label(const Labels& labels, int j, int ti) {
  return labels.area_ids[j] + "," + std::to_string(labels.years[ti]);
}

}  // namespace

AreaIndex Labels::area_index() const {
  AreaIndex idx;
  for (std::size_t j = 0; j < area_ids.size(); ++j) idx.emplace(area_ids[j], static_cast<int>(j));
  return idx;
}

InputData load_dataset(std::istream& plots, std::istream& covariates, const std::vector<std::string>& svc_selection,
                       const std::string& plots_name, const std::string& covariates_name) {
  std::vector<std::string> cov_header, plot_header;
  const auto cov_lines = read_lines(covariates);
  const auto cov_rows = parse_csv(cov_lines, covariates_name, cov_header);
  require_header_prefix(cov_header, {"area_id", "year"}, covariates_name);
  if (cov_header.size() < 3) fail(ErrorCode::ParseError, covariates_name + ":1: no covariate columns");
  const int P = static_cast<int>(cov_header.size()) - 2;

  std::set<std::string> areas;
  std::set<long long> years;
  std::map<std::pair<std::string, long long>, std::vector<double>> cov;
  for (const auto& row : cov_rows) {
    const std::string area(row.fields[0]);
    if (area.empty()) fail(ErrorCode::ParseError, covariates_name + ":" + std::to_string(row.line) + ": empty area_id");
    const long long year = year_of(row, cov_header, covariates_name);
    std::vector<double> values;
    for (int p = 0; p < P; ++p) values.push_back(numeric(row, static_cast<std::size_t>(p) + 2, cov_header, covariates_name));
    if (!cov.emplace(std::pair{area, year}, std::move(values)).second)
      fail(ErrorCode::ParseError, covariates_name + ":" + std::to_string(row.line) + ": duplicate row for area " +
                                      area + ", year " + std::to_string(year));
    areas.insert(area);
    years.insert(year);
  }
  if (areas.empty()) fail(ErrorCode::ParseError, covariates_name + ": no covariate rows");

  Labels labels{{areas.begin(), areas.end()}, {years.begin(), years.end()}};
  const int J = static_cast<int>(labels.area_ids.size());
  const int T = static_cast<int>(labels.years.size());
  const AreaIndex area_index = labels.area_index();
  std::map<long long, int> year_index;
  for (int t = 0; t < T; ++t) year_index[labels.years[t]] = t;

  std::vector<int> svc;
  for (const auto& sel : svc_selection) {
    int col = -1;
    long long as_int = 0;
    if (parse_int(sel, as_int)) {
      col = static_cast<int>(as_int);
    } else {
      const auto it = std::find(cov_header.begin() + 2, cov_header.end(), sel);
      if (it != cov_header.end()) col = static_cast<int>(it - cov_header.begin()) - 1;
    }
    if (col < 1 || col > P)
      fail(ErrorCode::InvalidConfig, "space-varying covariate '" + sel + "' is not a covariate column");
    if (std::find(svc.begin(), svc.end(), col) != svc.end())
      fail(ErrorCode::InvalidConfig, "space-varying covariate '" + sel + "' selected twice");
    svc.push_back(col);
  }

  const auto cells = static_cast<Eigen::Index>(J) * T;
  Eigen::MatrixXd x(P + 1, cells), x_svc(static_cast<Eigen::Index>(svc.size()), cells);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) {
      const auto it = cov.find({labels.area_ids[j], labels.years[t]});
      if (it == cov.end())
        fail(ErrorCode::CovariateGap, covariates_name + ": no covariate row for area " + labels.area_ids[j] +
                                          ", year " + std::to_string(labels.years[t]));
      const auto c = static_cast<Eigen::Index>(t) * J + j;
      x(0, c) = 1.0;
      for (int p = 0; p < P; ++p) x(p + 1, c) = it->second[p];
      for (std::size_t q = 0; q < svc.size(); ++q) x_svc(static_cast<Eigen::Index>(q), c) = it->second[svc[q] - 1];
    }

  const auto plot_lines = read_lines(plots);
  const auto plot_rows = parse_csv(plot_lines, plots_name, plot_header);
  require_header_prefix(plot_header, {"area_id", "year", "value"}, plots_name);
  std::vector<Observation> obs;
  obs.reserve(plot_rows.size());
  for (const auto& row : plot_rows) {
    const std::string area(row.fields[0]);
    const long long year = year_of(row, plot_header, plots_name);
    const double value = numeric(row, 2, plot_header, plots_name);
    const auto a = area_index.find(area);
    const auto y = year_index.find(year);
    if (a == area_index.end() || y == year_index.end())
      fail(ErrorCode::CovariateGap, plots_name + ":" + std::to_string(row.line) + ": no covariates for area " + area +
                                        ", year " + std::to_string(year));
    obs.push_back({a->second, y->second, value});
  }

  std::vector<std::string> names(cov_header.begin() + 2, cov_header.end());
  return InputData{Dataset(J, T, std::move(x), std::move(x_svc), std::move(obs)), std::move(labels), std::move(names),
                   std::move(svc)};
}

InputData load_dataset(const std::filesystem::path& plots, const std::filesystem::path& covariates,
                       const std::vector<std::string>& svc_selection) {
  std::ifstream p(plots), c(covariates);
  if (!p) fail(ErrorCode::IoError, "cannot open plots file " + plots.string());
  if (!c) fail(ErrorCode::IoError, "cannot open covariates file " + covariates.string());
  return load_dataset(p, c, svc_selection, plots.string(), covariates.string());
}

// ---- configuration ----

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto bad = [&](const std::string& what) {
    fail(ErrorCode::InvalidConfig, "setting '" + key + "': " + what + " (got '" + value + "')");
  };
  const auto integer = [&](auto& out, long long lo) {
    long long v = 0;
    if (!parse_int(value, v) || v < lo) bad("expected an integer >= " + std::to_string(lo));
    out = static_cast<std::remove_reference_t<decltype(out)>>(v);
  };
  const auto real = [&](std::optional<double>& out) {
    double v = 0.0;
    if (!parse_double(value, v)) bad("expected a number");
    out = v;
  };
  const auto boolean = [&](bool& out) {
    if (value == "true" || value == "1") out = true;
    else if (value == "false" || value == "0") out = false;
    else bad("expected true or false");
  };
  const auto positive = [&](double& out) {
    double v = 0.0;
    if (!parse_double(value, v) || !(v > 0.0)) bad("expected a positive number");
    out = v;
  };

  if (key == "plots") plots = value;
  else if (key == "covariates") covariates = value;
  else if (key == "adjacency") adjacency = value;
  else if (key == "out") out_dir = value;
  else if (key == "svc") svc = split_list(value);
  else if (key == "iterations") integer(mcmc.total_iterations, 1);
  else if (key == "burn_in") integer(mcmc.burn_in, 0);
  else if (key == "thin") integer(mcmc.thin, 1);
  else if (key == "chains") integer(mcmc.chains, 1);
  else if (key == "workers") integer(mcmc.workers, 1);
  else if (key == "seed") {
    long long v = 0;
    if (!parse_int(value, v) || v < 0) bad("expected a non-negative integer");
    mcmc.seed = static_cast<std::uint64_t>(v);
  } else if (key == "sub_model") boolean(mcmc.sub_model);
  else if (key == "adapt") boolean(mcmc.adapt_during_burnin);
  else if (key == "adapt_interval") integer(mcmc.adapt_interval, 1);
  else if (key == "target_acceptance") positive(mcmc.target_acceptance);
  else if (key == "proposal_sd_rho_omega") positive(mcmc.proposal_sd_rho_omega);
  else if (key == "proposal_sd_rho_eta") {
    mcmc.proposal_sd_rho_eta.clear();
    for (const auto& f : split_list(value)) {
      double v = 0.0;
      if (!parse_double(f, v) || !(v > 0.0)) bad("expected positive numbers");
      mcmc.proposal_sd_rho_eta.push_back(v);
    }
  } else if (key == "a_sigma") real(hyper.a_sigma);
  else if (key == "b_sigma") real(hyper.b_sigma);
  else if (key == "a_eta") real(hyper.a_eta);
  else if (key == "b_eta") real(hyper.b_eta);
  else if (key == "a_omega") real(hyper.a_omega);
  else if (key == "b_omega") real(hyper.b_omega);
  else if (key == "nu_xi") real(hyper.nu_xi);
  else if (key == "h_xi") real(hyper.h_xi);
  else if (key == "sigma0") real(hyper.sigma0);
  else if (key == "mu0") real(hyper.mu0);
  else if (key == "verbosity") integer(verbosity, 0);
  else fail(ErrorCode::InvalidConfig, "unknown setting '" + key + "'");
}

std::string RunConfig::canonical() const {
  auto out = classic_stream();
  out << "plots = " << plots.generic_string() << '\n'
      << "covariates = " << covariates.generic_string() << '\n'
      << "adjacency = " << adjacency.generic_string() << '\n'
      << "svc = " << join(svc) << '\n'
      << "iterations = " << mcmc.total_iterations << '\n'
      << "burn_in = " << mcmc.burn_in << '\n'
      << "thin = " << mcmc.thin << '\n'
      << "chains = " << mcmc.chains << '\n'
      << "seed = " << mcmc.seed << '\n'
      << "sub_model = " << (mcmc.sub_model ? "true" : "false") << '\n'
      << "adapt = " << (mcmc.adapt_during_burnin ? "true" : "false") << '\n'
      << "adapt_interval = " << mcmc.adapt_interval << '\n'
      << "target_acceptance = " << fmt(mcmc.target_acceptance) << '\n'
      << "proposal_sd_rho_omega = " << fmt(mcmc.proposal_sd_rho_omega) << '\n';
  std::vector<std::string> sds;
  for (double v : mcmc.proposal_sd_rho_eta) sds.push_back(fmt(v));
  if (!sds.empty()) out << "proposal_sd_rho_eta = " << join(sds) << '\n';
  const std::pair<const char*, const std::optional<double>*> hyper_keys[] = {
      {"a_sigma", &hyper.a_sigma}, {"b_sigma", &hyper.b_sigma}, {"a_eta", &hyper.a_eta},
      {"b_eta", &hyper.b_eta},     {"a_omega", &hyper.a_omega}, {"b_omega", &hyper.b_omega},
      {"nu_xi", &hyper.nu_xi},     {"h_xi", &hyper.h_xi},       {"sigma0", &hyper.sigma0},
      {"mu0", &hyper.mu0}};
  for (const auto& [k, v] : hyper_keys)
    if (v->has_value()) out << k << " = " << fmt(**v) << '\n';
  return out.str();
}

Hyperparameters RunConfig::hyperparameters(int P, int Q, int T) const {
  Hyperparameters h = Hyperparameters::defaults(P, Q, T);
  if (hyper.a_sigma) h.a_sigma = *hyper.a_sigma;
  if (hyper.b_sigma) h.b_sigma = *hyper.b_sigma;
  if (hyper.a_eta) h.a_eta.assign(Q, *hyper.a_eta);
  if (hyper.b_eta) h.b_eta.assign(Q, *hyper.b_eta);
  if (hyper.a_omega) h.a_omega.assign(T, *hyper.a_omega);
  if (hyper.b_omega) h.b_omega.assign(T, *hyper.b_omega);
  if (hyper.nu_xi) h.nu_xi = *hyper.nu_xi;
  if (hyper.h_xi) h.H_xi = *hyper.h_xi * Eigen::MatrixXd::Identity(P + 1, P + 1);
  if (hyper.sigma0) h.Sigma0 = *hyper.sigma0 * Eigen::MatrixXd::Identity(P + 1, P + 1);
  if (hyper.mu0) h.mu0 = Eigen::VectorXd::Constant(P + 1, *hyper.mu0);
  h.validate(P, Q, T);
  return h;
}

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  for (const auto& kv : parse_key_values(in, ErrorCode::InvalidConfig)) {
    try {
      cfg.set(kv.key, kv.value);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(kv.line) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config file " + path.string());
  return parse_run_config(in);
}

// ---- writers ----

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.close();
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_labels(const std::filesystem::path& dir, const Labels& labels) {
  auto a = classic_stream();
  a << "area_index,area_id\n";
  for (std::size_t j = 0; j < labels.area_ids.size(); ++j) a << j << ',' << labels.area_ids[j] << '\n';
  write_text_file(dir / "area_map.csv", a.str());
  auto y = classic_stream();
  y << "t,year\n";
  for (std::size_t t = 0; t < labels.years.size(); ++t) y << t + 1 << ',' << labels.years[t] << '\n';
  write_text_file(dir / "year_map.csv", y.str());
}

Labels read_labels(const std::filesystem::path& dir) {
  Labels labels;
  std::vector<std::string> header;
  {
    const auto name = (dir / "area_map.csv").string();
    std::istringstream in(read_text_file(dir / "area_map.csv"));
    const auto lines = read_lines(in);
    for (const auto& row : parse_csv(lines, name, header)) {
      if (row.fields.size() != 2) fail(ErrorCode::ParseError, name + ": expected area_index,area_id");
      labels.area_ids.emplace_back(row.fields[1]);
    }
  }
  {
    const auto name = (dir / "year_map.csv").string();
    std::istringstream in(read_text_file(dir / "year_map.csv"));
    const auto lines = read_lines(in);
    for (const auto& row : parse_csv(lines, name, header)) {
      long long y = 0;
      if (row.fields.size() != 2 || !parse_int(row.fields[1], y))
        fail(ErrorCode::ParseError, name + ":" + std::to_string(row.line) + ": expected t,year");
      labels.years.push_back(y);
    }
  }
  return labels;
}

void write_mu_summary(std::ostream& out, const PosteriorDraws& draws, const Labels& labels,
                      const std::vector<int>& counts) {
  out << "area_id,year,n,mean,sd,q025,q500,q975\n";
  std::vector<double> v(static_cast<std::size_t>(draws.retained));
  for (int j = 0; j < draws.J; ++j)
    for (int ti = 0; ti < draws.T; ++ti) {
      for (int s = 0; s < draws.retained; ++s) v[s] = draws.mu_at(s, j, ti);
      const DrawSummary d = summarize_draws(v);
      const auto c = static_cast<std::size_t>(ti) * draws.J + j;
      out << cell_label(labels, j, ti) << ',' << (c < counts.size() ? counts[c] : 0) << ',' << fmt(d.mean) << ','
          << fmt(d.sd) << ',' << fmt(d.q025) << ',' << fmt(d.q500) << ',' << fmt(d.q975) << '\n';
    }
}

void write_trend_summary(std::ostream& out, const PosteriorDraws& draws, const Labels& labels) {
  const std::vector<double> theta = draws.theta.empty() ? trend_draws(draws) : draws.theta;
  const auto summary = significant_trends(theta, draws.retained, draws.J);
  out << "area_id,mean,lower,upper,significant\n";
  for (int j = 0; j < draws.J; ++j) {
    const auto& s = summary[j];
    out << labels.area_ids[j] << ',' << fmt(s.mean) << ',' << fmt(s.lower) << ',' << fmt(s.upper) << ','
        << (s.significant ? "true" : "false") << '\n';
  }
}

void write_direct_estimates(std::ostream& out, const DirectEstimates& direct, const Labels& labels) {
  out << "area_id,year,n,mean,variance,lower,upper,missing_reason\n";
  for (int j = 0; j < direct.J; ++j)
    for (int ti = 0; ti < direct.T; ++ti) {
      const auto i = direct.index(j, ti);
      const auto ci = direct.interval(j, ti);
      out << cell_label(labels, j, ti) << ',' << direct.n[i] << ',' << opt(direct.mean[i]) << ','
          << opt(direct.variance[i]) << ',' << (ci ? fmt(ci->first) : "NA") << ',' << (ci ? fmt(ci->second) : "NA")
          << ',' << to_string(direct.reason[i]) << '\n';
    }
}

void write_params_summary(std::ostream& out, const PosteriorDraws& draws, const Labels& labels) {
  out << "parameter,mean,sd,q025,q500,q975\n";
  const auto S = static_cast<std::size_t>(draws.retained);
  const auto row = [&](const std::string& name, const std::vector<double>& flat, std::size_t stride,
                       std::size_t offset) {
    std::vector<double> v(S);
    for (std::size_t s = 0; s < S; ++s) v[s] = flat[s * stride + offset];
    const DrawSummary d = summarize_draws(std::move(v));
    out << name << ',' << fmt(d.mean) << ',' << fmt(d.sd) << ',' << fmt(d.q025) << ',' << fmt(d.q500) << ','
        << fmt(d.q975) << '\n';
  };
  const auto P1 = static_cast<std::size_t>(draws.P) + 1;
  const auto T = static_cast<std::size_t>(draws.T);
  const auto year = [&](std::size_t t) { return std::to_string(labels.years[t]); };
  for (std::size_t t = 0; t <= T; ++t)
    for (std::size_t p = 0; p < P1; ++p)
      row("beta_" + std::to_string(p) + "[" + (t == 0 ? std::string("initial") : year(t - 1)) + "]", draws.beta,
          (T + 1) * P1, t * P1 + p);
  for (std::size_t a = 0; a < P1; ++a)
    for (std::size_t b = a; b < P1; ++b)
      row("sigma_xi_" + std::to_string(a) + "_" + std::to_string(b), draws.sigma_xi, P1 * P1, a * P1 + b);
  if (draws.variant == ModelVariant::Full)
    for (std::size_t q = 0; q < static_cast<std::size_t>(draws.Q); ++q) {
      row("tau_sq_eta_" + std::to_string(q + 1), draws.tau_sq_eta, draws.Q, q);
      row("rho_eta_" + std::to_string(q + 1), draws.rho_eta, draws.Q, q);
    }
  for (std::size_t t = 0; t < T; ++t) row("tau_sq_omega[" + year(t) + "]", draws.tau_sq_omega, T, t);
  row("rho_omega", draws.rho_omega, 1, 0);
  for (std::size_t t = 0; t < T; ++t) row("sigma_sq[" + year(t) + "]", draws.sigma_sq, T, t);
}

void write_waic(std::ostream& out, const WaicReport& r) {
  out << "metric,estimate,se\n"
      << "elpd_waic," << fmt(r.elpd_waic.estimate) << ',' << fmt(r.elpd_waic.se) << '\n'
      << "p_waic," << fmt(r.p_waic.estimate) << ',' << fmt(r.p_waic.se) << '\n'
      << "waic," << fmt(r.waic.estimate) << ',' << fmt(r.waic.se) << '\n';
}

void write_waic_pointwise(std::ostream& out, const WaicReport& report, const Dataset& data, const Labels& labels) {
  const auto& obs = data.observations();
  if (obs.size() != report.size()) fail(ErrorCode::MisalignedDraws, "WAIC report does not match the observations");
  out << "observation,area_id,year,value,elpd,p_waic\n";
  for (std::size_t i = 0; i < obs.size(); ++i)
    out << i << ',' << cell_label(labels, obs[i].area, obs[i].time) << ',' << fmt(obs[i].value) << ','
        << fmt(report.pointwise_elpd[i]) << ',' << fmt(report.pointwise_p[i]) << '\n';
}

WaicReport read_waic_pointwise(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  const auto lines = read_lines(in);
  std::vector<std::string> header;
  const auto rows = parse_csv(lines, path.string(), header);
  require_header_prefix(header, {"observation", "area_id", "year", "value", "elpd", "p_waic"}, path.string());
  std::vector<double> elpd, p;
  for (const auto& row : rows) {
    elpd.push_back(numeric(row, 4, header, path.string()));
    p.push_back(numeric(row, 5, header, path.string()));
  }
  return waic_from_pointwise(std::move(elpd), std::move(p));
}

void write_metropolis(std::ostream& out, const std::vector<MetropolisStats>& stats) {
  out << "chain,parameter,proposals,accepts,acceptance_rate,step_size\n";
  for (std::size_t c = 0; c < stats.size(); ++c) {
    auto entries = stats[c].rho_eta;
    entries.push_back(stats[c].rho_omega);
    for (const auto& e : entries)
      out << c + 1 << ',' << e.name << ',' << e.proposals << ',' << e.accepts << ',' << fmt(e.acceptance_rate()) << ','
          << fmt(e.step_size) << '\n';
  }
}

void write_summaries(const PosteriorDraws& draws, const DirectEstimates& direct, const Labels& labels,
                     const std::vector<int>& counts, const std::filesystem::path& out_dir) {
  if (draws.retained <= 0) fail(ErrorCode::MisalignedDraws, "no posterior draws to summarize");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create output directory " + out_dir.string() + ": " + ec.message());
  {
    auto s = classic_stream();
    write_mu_summary(s, draws, labels, counts);
    write_text_file(out_dir / "mu_summary.csv", s.str());
  }
  if (draws.T >= 2) {
    auto s = classic_stream();
    write_trend_summary(s, draws, labels);
    write_text_file(out_dir / "trend_summary.csv", s.str());
  }
  {
    auto s = classic_stream();
    write_direct_estimates(s, direct, labels);
    write_text_file(out_dir / "direct_estimates.csv", s.str());
  }
  {
    auto s = classic_stream();
    write_params_summary(s, draws, labels);
    write_text_file(out_dir / "params_summary.csv", s.str());
  }
}

void write_waic_comparison(std::ostream& out, const std::vector<std::string>& names,
                           const std::vector<WaicReport>& reports) {
  if (names.size() != reports.size() || reports.empty())
    fail(ErrorCode::MisalignedDraws, "need one name per WAIC report");
  const auto cell = [](const EstimateWithSe& e) { return format_double(e.estimate) + " (" + format_double(e.se) + ")"; };
  out << "model,elpd_waic,p_waic,waic,elpd_diff\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out << names[i] << ',' << cell(reports[i].elpd_waic) << ',' << cell(reports[i].p_waic) << ','
        << cell(reports[i].waic) << ',';
    if (i == 0) out << "0 (0)";
    else out << cell(elpd_difference(reports[i], reports[0]));
    out << '\n';
  }
}

std::vector<int> read_cell_counts(const std::filesystem::path& dir, const Labels& labels) {
  const auto path = dir / "direct_estimates.csv";
  std::istringstream in(read_text_file(path));
  const auto lines = read_lines(in);
  std::vector<std::string> header;
  const auto rows = parse_csv(lines, path.string(), header);
  require_header_prefix(header, {"area_id", "year", "n"}, path.string());
  const auto J = labels.area_ids.size();
  const AreaIndex idx = labels.area_index();
  std::map<long long, std::size_t> years;
  for (std::size_t t = 0; t < labels.years.size(); ++t) years[labels.years[t]] = t;
  std::vector<int> counts(J * labels.years.size(), 0);
  for (const auto& row : rows) {
    long long y = 0, n = 0;
    const auto a = idx.find(std::string(row.fields[0]));
    if (a == idx.end() || !parse_int(row.fields[1], y) || !years.count(y) || !parse_int(row.fields[2], n))
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(row.line) + ": unrecognized cell");
    counts[years[y] * J + static_cast<std::size_t>(a->second)] = static_cast<int>(n);
  }
  return counts;
}

FitOutputs run_fit(const RunConfig& config, std::ostream* log) {
  const auto say = [&](const std::string& msg) {
    if (log && config.verbosity > 0) *log << msg << '\n';
  };
  if (config.plots.empty() || config.covariates.empty() || config.adjacency.empty() || config.out_dir.empty())
    fail(ErrorCode::InvalidConfig, "plots, covariates, adjacency and out must all be given");
  config.mcmc.validate();

  InputData input = load_dataset(config.plots, config.covariates, config.svc);
  const Dataset& data = input.dataset;
  say("loaded " + std::to_string(data.num_observations()) + " plots over " + std::to_string(data.num_areas()) +
      " areas and " + std::to_string(data.num_times()) + " years");

  const AdjacencyGraph graph = load_adjacency(read_edge_list(config.adjacency), input.labels.area_index());
  const CarEigenSystem spatial(graph);
  const Hyperparameters hyper = config.hyperparameters(data.num_covariates(), data.num_svc(), data.num_times());

  say("sampling " + std::to_string(config.mcmc.chains) + " chain(s) of " +
      std::to_string(config.mcmc.total_iterations) + " iterations");
  FitResult fit = fit_model(data, spatial, hyper, config.mcmc);
  DirectEstimates direct = direct_estimates(data);
  WaicReport waic_report = waic(data, fit.draws);

  const auto& dir = config.out_dir;
  std::vector<int> counts(static_cast<std::size_t>(data.num_areas()) * data.num_times());
  for (int ti = 0; ti < data.num_times(); ++ti)
    for (int j = 0; j < data.num_areas(); ++j) counts[data.cell_index(j, ti)] = data.count(j, ti);
  write_summaries(fit.draws, direct, input.labels, counts, dir);
  write_labels(dir, input.labels);
  {
    auto s = classic_stream();
    write_waic(s, waic_report);
    write_text_file(dir / "waic.csv", s.str());
  }
  {
    auto s = classic_stream();
    write_waic_pointwise(s, waic_report, data, input.labels);
    write_text_file(dir / "waic_pointwise.csv", s.str());
  }
  {
    auto s = classic_stream();
    write_metropolis(s, fit.stats);
    write_text_file(dir / "metropolis.csv", s.str());
  }
  {
    std::ofstream out(dir / "draws.bin", std::ios::binary);
    write_draws(out, fit.draws);
    out.close();
    if (!out) fail(ErrorCode::IoError, "cannot write " + (dir / "draws.bin").string());
  }
  const std::string canonical = config.canonical();
  write_text_file(dir / "run_config.txt", canonical);
  {
    auto m = classic_stream();
    m << "format = stsae-run 1\n"
      << "library_version = " << kVersion << '\n'
      << "eigen_version = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n'
      << "command = fit\n"
      << "variant = " << (config.mcmc.sub_model ? "sub" : "full") << '\n'
      << "seed = " << config.mcmc.seed << '\n'
      << "chains = " << config.mcmc.chains << '\n'
      << "retained = " << fit.draws.retained << '\n'
      << "config_hash = " << hex64(fnv1a(canonical)) << '\n'
      << "plots_hash = " << hex64(fnv1a(read_text_file(config.plots))) << '\n'
      << "covariates_hash = " << hex64(fnv1a(read_text_file(config.covariates))) << '\n'
      << "adjacency_hash = " << hex64(fnv1a(read_text_file(config.adjacency))) << '\n';
    write_text_file(dir / "run_manifest", m.str());
  }
  say("wrote results to " + dir.string());
  return FitOutputs{std::move(input), std::move(fit), std::move(direct), std::move(waic_report)};
}

}  // namespace stsae
