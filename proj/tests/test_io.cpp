#include "fixtures.hpp"
#include "oracle.hpp"
#include "stsae/error.hpp"
#include "stsae/io.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace stsae;

namespace {

ErrorCode load_code(const std::string& plots, const std::string& cov, std::vector<std::string> svc = {}) {
  std::istringstream p(plots), c(cov);
  try {
    load_dataset(p, c, svc);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

const char* kCov =
    "area_id,year,tcc,slope\n"
    "B,2020,10,1\nA,2019,20,2\nA,2020,30,3\nB,2019,40,4\n";

}  // namespace

TEST_CASE("load_dataset counts plots per cell") {
  std::istringstream p("area_id,year,value\nA,2019,1.5\nA,2019,2.5\nB,2020,7\n"), c(kCov);
  const auto in = load_dataset(p, c, {"slope"});
  const auto& d = in.dataset;
  CHECK(d.num_areas() == 2);
  CHECK(d.num_times() == 2);
  CHECK(in.labels.area_ids == std::vector<std::string>{"A", "B"});
  CHECK(in.labels.years == std::vector<long long>{2019, 2020});
  CHECK(d.count(0, 0) == 2);
  CHECK(d.count(0, 1) == 0);
  CHECK(d.count(1, 0) == 0);
  CHECK(d.count(1, 1) == 1);
  CHECK(d.num_covariates() == 2);
  CHECK(d.num_svc() == 1);
  CHECK(in.svc_columns == std::vector<int>{2});
  CHECK(d.x(1, 1)(0) == 1.0);
  CHECK(d.x(1, 1)(1) == 10.0);
  CHECK(d.x_svc(0, 0)(0) == 2.0);
  CHECK(in.covariate_names == std::vector<std::string>{"tcc", "slope"});

  std::istringstream p2("area_id,year,value\nA,2019,1.5\n"), c2(kCov);
  CHECK(load_dataset(p2, c2, {"1"}).svc_columns == std::vector<int>{1});
}

TEST_CASE("duplicated plot rows stay distinct observations") {
  std::istringstream p("area_id,year,value\nA,2019,4\nA,2019,4\nA,2019,4\n"), c(kCov);
  const auto in = load_dataset(p, c, {});
  CHECK(in.dataset.count(0, 0) == 3);
  CHECK(in.dataset.num_observations() == 3);
}

TEST_CASE("load_dataset errors") {
  const std::string plots = "area_id,year,value\nA,2019,1\n";
  CHECK(load_code(plots, "area_id,year,tcc\nA,2019,1\nA,2020,2\nB,2019,3\n") == ErrorCode::CovariateGap);
  try {
    std::istringstream p(plots), c("area_id,year,tcc\nA,2019,1\nA,2020,2\nB,2019,3\n");
    load_dataset(p, c, {});
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("B") != std::string::npos);
    CHECK(msg.find("2020") != std::string::npos);
  }
  CHECK(load_code("area_id,year,value\nC,2019,1\n", kCov) == ErrorCode::CovariateGap);
  CHECK(load_code("area_id,year,value\nA,2018,1\n", kCov) == ErrorCode::CovariateGap);
  CHECK(load_code("area_id,year,value\nA,2019,abc\n", kCov) == ErrorCode::NonNumeric);
  CHECK(load_code("area_id,year,value\nA,2019\n", kCov) == ErrorCode::ParseError);
  CHECK(load_code("id,year,value\nA,2019,1\n", kCov) == ErrorCode::ParseError);
  CHECK(load_code(plots, "area_id,year,tcc\nA,2019,1\nA,2019,1\n") == ErrorCode::ParseError);
  CHECK(load_code(plots, kCov, {"nope"}) == ErrorCode::InvalidConfig);
  CHECK(load_code(plots, kCov, {"3"}) == ErrorCode::InvalidConfig);
}

TEST_CASE("run config parsing and canonical form") {
  std::istringstream in(
      "# settings\nplots = p.csv\ncovariates = c.csv\nadjacency = a.txt\nsvc = tcc\n"
      "iterations = 300\nburn_in = 100\nthin = 2\nchains = 2\nseed = 9\nsub_model = true\n"
      "proposal_sd_rho_eta = 0.3\na_sigma = 3\nh_xi = 50\n");
  const auto cfg = parse_run_config(in);
  CHECK(cfg.mcmc.total_iterations == 300);
  CHECK(cfg.mcmc.retained() == 100);
  CHECK(cfg.mcmc.sub_model);
  CHECK(cfg.svc == std::vector<std::string>{"tcc"});
  const auto h = cfg.hyperparameters(2, 1, 3);
  CHECK(h.a_sigma == 3.0);
  CHECK(h.H_xi(2, 2) == 50.0);
  CHECK(h.b_sigma == 100.0);

  std::istringstream again(cfg.canonical());
  CHECK(parse_run_config(again).canonical() == cfg.canonical());

  for (const char* bad : {"iterations = -1\n", "colour = red\n", "seed = x\n", "no equals\n", "sub_model = maybe\n"}) {
    std::istringstream b(bad);
    CHECK_THROWS_AS(parse_run_config(b), Error);
  }
}

TEST_CASE("labels round trip") {
  const auto dir = fixture::scratch_dir("labels");
  Labels simple{{"north", "south"}, {2001, 2005}};
  write_labels(dir, simple);
  const auto back = read_labels(dir);
  CHECK(back.area_ids == simple.area_ids);
  CHECK(back.years == simple.years);
  CHECK(back.area_index().at("south") == 1);
}

TEST_CASE("summaries with a single draw") {
  auto draws = PosteriorDraws::allocate(2, 2, 0, 0, 1);
  draws.mu = {1.0, 2.0, 3.0, 4.5};
  const Labels labels{{"A", "B"}, {2019, 2020}};
  std::ostringstream out;
  write_mu_summary(out, draws, labels, {1, 0, 0, 2});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "area_id,year,n,mean,sd,q025,q500,q975");
  std::getline(in, line);
  CHECK(line == "A,2019,1,1,0,1,1,1");
  std::getline(in, line);
  CHECK(line == "A,2020,0,2,0,2,2,2");
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "B,2020,2,4.5,0,4.5,4.5,4.5");
}

TEST_CASE("mu summary quantiles match the order-statistic oracle") {
  Rng rng(3);
  const int J = 3, T = 2, S = 57;
  auto draws = PosteriorDraws::allocate(J, T, 0, 0, S);
  for (auto& m : draws.mu) m = 10.0 * rng.normal();
  const Labels labels{{"a", "b", "c"}, {1, 2}};
  const auto dir = fixture::scratch_dir("quant");
  {
    std::ostringstream out;
    write_mu_summary(out, draws, labels, std::vector<int>(J * T, 0));
    write_text_file(dir / "mu.csv", out.str());
  }
  const auto rows = fixture::read_csv(dir / "mu.csv");
  REQUIRE(rows.size() == 1 + J * T);
  int r = 1;
  for (int j = 0; j < J; ++j)
    for (int ti = 0; ti < T; ++ti, ++r) {
      std::vector<double> v;
      for (int s = 0; s < S; ++s) v.push_back(draws.mu_at(s, j, ti));
      CHECK(std::stod(rows[r][5]) == oracle::sorted_quantile(v, 0.025));
      CHECK(std::stod(rows[r][6]) == oracle::sorted_quantile(v, 0.5));
      CHECK(std::stod(rows[r][7]) == oracle::sorted_quantile(v, 0.975));
      CHECK(std::stod(rows[r][5]) <= std::stod(rows[r][6]));
      CHECK(std::stod(rows[r][6]) <= std::stod(rows[r][7]));
    }
}

TEST_CASE("WAIC pointwise file round trip and comparison table") {
  const auto dir = fixture::scratch_dir("waic");
  const Dataset data(1, 1, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd(0, 1), {{0, 0, 1.0}, {0, 0, 2.0}});
  const Labels labels{{"A"}, {2020}};
  const auto full = waic_from_pointwise({-1.25, -2.5}, {0.125, 0.25});
  {
    std::ostringstream out;
    write_waic_pointwise(out, full, data, labels);
    write_text_file(dir / "pw.csv", out.str());
  }
  const auto back = read_waic_pointwise(dir / "pw.csv");
  CHECK(back.pointwise_elpd == full.pointwise_elpd);
  CHECK(back.pointwise_p == full.pointwise_p);

  const auto sub = waic_from_pointwise({-1.75, -2.5}, {0.125, 0.25});
  std::ostringstream table;
  write_waic_comparison(table, {"full", "sub"}, {full, sub});
  std::istringstream in(table.str());
  std::string header, r1, r2;
  std::getline(in, header);
  std::getline(in, r1);
  std::getline(in, r2);
  CHECK(header == "model,elpd_waic,p_waic,waic,elpd_diff");
  CHECK(r1.rfind("full,", 0) == 0);
  CHECK(r1.find("0 (0)") != std::string::npos);
  CHECK(r2.rfind("sub,", 0) == 0);
  CHECK(r2.find("-0.5 (") != std::string::npos);

  std::ostringstream w;
  write_waic(w, full);
  CHECK(w.str().rfind("metric,estimate,se\n", 0) == 0);
  CHECK(w.str().find("\nwaic,7.5,") != std::string::npos);
}
