#include "stsae/sampler.hpp"

#include "binary.hpp"
#include "stsae/error.hpp"
#include "stsae/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

namespace stsae {

namespace {

constexpr double kInitialStep = 0.5;

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success || !m.allFinite())
    fail(ErrorCode::CholeskyFailure, std::string(what) + " is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

double svc_term(const ModelState& s, const ModelContext& ctx, int j, int ti, int skip = -1) {
  double out = 0.0;
  const int Q = ctx.Q();
  if (Q == 0) return 0.0;
  const auto xs = ctx.data.x_svc(j, ti);
  for (int q = 0; q < Q; ++q)
    if (q != skip) out += xs(q) * s.eta_star[q](j);
  return out;
}

double fixed_term(const ModelState& s, const ModelContext& ctx, int j, int ti) {
  return ctx.data.x(j, ti).dot(s.beta[ti + 1]);
}

double cell_mu(const ModelState& s, const ModelContext& ctx, int j, int ti) {
  return fixed_term(s, ctx, j, ti) + svc_term(s, ctx, j, ti) + s.u[ti + 1](j);
}

void check_time(int t, const ModelContext& ctx) {
  if (t < 1 || t > ctx.T()) fail(ErrorCode::DimensionMismatch, "time index " + std::to_string(t) + " out of range");
}

void check_svc(int k, const ModelContext& ctx) {
  if (k < 0 || k >= ctx.Q())
    fail(ErrorCode::DimensionMismatch, "space-varying covariate " + std::to_string(k) + " out of range");
}

double jacobian(double rho) { return std::log(rho) + std::log1p(-rho); }

bool metropolis_step(double& rho, const std::function<double(double)>& target, Rng& rng,
                     MetropolisStats::Entry& stats) {
  const double proposed = inv_logit(logit(rho) + stats.step_size * rng.normal());
  const double log_u = std::log(rng.uniform());
  bool accepted = false;
  if (proposed > 0.0 && proposed < 1.0) {
    double ratio = -std::numeric_limits<double>::infinity();
    try {
      ratio = target(proposed) - target(rho);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonPositiveFactor) throw;
    }
    accepted = !std::isnan(ratio) && log_u < ratio;
  }
  if (accepted) rho = proposed;
  stats.record(accepted);
  return accepted;
}

}  // namespace

void McmcConfig::validate() const {
  if (total_iterations <= 0) fail(ErrorCode::InvalidConfig, "total_iterations must be positive");
  if (burn_in < 0 || burn_in >= total_iterations)
    fail(ErrorCode::InvalidConfig, "burn_in must lie in [0, total_iterations)");
  if (thin <= 0) fail(ErrorCode::InvalidConfig, "thin must be positive");
  if (retained() <= 0) fail(ErrorCode::InvalidConfig, "no draws would be retained");
  for (double sd : proposal_sd_rho_eta)
    if (!(sd > 0.0) || !std::isfinite(sd)) fail(ErrorCode::InvalidConfig, "proposal sd must be positive");
  if (!(proposal_sd_rho_omega > 0.0) || !std::isfinite(proposal_sd_rho_omega))
    fail(ErrorCode::InvalidConfig, "proposal sd must be positive");
  if (adapt_interval <= 0) fail(ErrorCode::InvalidConfig, "adapt_interval must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    fail(ErrorCode::InvalidConfig, "target_acceptance must lie in (0, 1)");
  if (chains <= 0) fail(ErrorCode::InvalidConfig, "chains must be positive");
  if (workers <= 0) fail(ErrorCode::InvalidConfig, "workers must be positive");
}

void MetropolisStats::Entry::record(bool accepted) {
  ++proposals;
  ++batch_proposals;
  if (accepted) {
    ++accepts;
    ++batch_accepts;
  }
}

void MetropolisStats::Entry::adapt(double target) {
  if (batch_proposals == 0) return;
  ++batches;
  const double rate = static_cast<double>(batch_accepts) / static_cast<double>(batch_proposals);
  const double delta = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(batches)));
  step_size *= std::exp(rate > target ? delta : -delta);
  batch_proposals = 0;
  batch_accepts = 0;
}

MetropolisStats MetropolisStats::create(int Q, const McmcConfig& config) {
  MetropolisStats out;
  out.rho_eta.resize(static_cast<std::size_t>(Q));
  for (int q = 0; q < Q; ++q) {
    auto& e = out.rho_eta[static_cast<std::size_t>(q)];
    e.name = "rho_eta_" + std::to_string(q + 1);
    e.step_size = q < static_cast<int>(config.proposal_sd_rho_eta.size()) ? config.proposal_sd_rho_eta[q]
                                                                          : kInitialStep;
  }
  out.rho_omega.step_size = config.proposal_sd_rho_omega;
  return out;
}

// ---- full conditionals ----

GaussianCanonical beta0_conditional(const ModelState& s, const ModelContext& ctx) {
  const auto& h = ctx.hyper;
  const Eigen::MatrixXd s0_inv = spd_inverse(h.Sigma0, "Sigma0");
  const Eigen::MatrixXd xi_inv = spd_inverse(s.sigma_xi, "Sigma_xi");
  return {s0_inv + xi_inv, s0_inv * h.mu0 + xi_inv * s.beta[1]};
}

GaussianCanonical eta_star_conditional(int k, const ModelState& s, const ModelContext& ctx) {
  check_svc(k, ctx);
  const int J = ctx.J();
  const auto& data = ctx.data;
  GaussianCanonical g{Eigen::MatrixXd::Zero(J, J), Eigen::VectorXd::Zero(J)};
  add_scaled_precision(ctx.graph(), s.rho_eta[k], 1.0 / s.tau_sq_eta[k], g.precision);
  for (int ti = 0; ti < ctx.T(); ++ti) {
    const double inv_sigma = 1.0 / s.sigma_sq[ti];
    for (int j = 0; j < J; ++j) {
      const CellStats& c = data.cell(j, ti);
      if (c.n == 0) continue;
      const double xk = data.x_svc(j, ti)(k);
      const double partial = fixed_term(s, ctx, j, ti) + svc_term(s, ctx, j, ti, k) + s.u[ti + 1](j);
      g.precision(j, j) += c.n * xk * xk * inv_sigma;
      g.linear(j) += xk * c.n * (c.mean - partial) * inv_sigma;
    }
  }
  return g;
}

InverseGamma tau_sq_eta_conditional(int k, const ModelState& s, const ModelContext& ctx) {
  check_svc(k, ctx);
  const double qf = precision_quad_form(ctx.graph(), s.rho_eta[k], 1.0, s.eta_star[k], s.eta_star[k]);
  return {ctx.hyper.a_eta[k] + 0.5 * ctx.J(), ctx.hyper.b_eta[k] + 0.5 * qf};
}

InverseWishart sigma_xi_conditional(const ModelState& s, const ModelContext& ctx) {
  Eigen::MatrixXd scale = ctx.hyper.H_xi;
  for (int t = 1; t <= ctx.T(); ++t) {
    const Eigen::VectorXd d = s.beta[t] - s.beta[t - 1];
    scale.noalias() += d * d.transpose();
  }
  return {ctx.hyper.nu_xi + ctx.T(), 0.5 * (scale + scale.transpose())};
}

GaussianCanonical beta_t_conditional(int t, const ModelState& s, const ModelContext& ctx) {
  check_time(t, ctx);
  const int ti = t - 1;
  const bool last = t == ctx.T();
  const Eigen::MatrixXd xi_inv = spd_inverse(s.sigma_xi, "Sigma_xi");
  GaussianCanonical g;
  g.precision = (last ? 1.0 : 2.0) * xi_inv;
  g.linear = xi_inv * (last ? s.beta[t - 1] : Eigen::VectorXd(s.beta[t - 1] + s.beta[t + 1]));
  const double inv_sigma = 1.0 / s.sigma_sq[ti];
  for (int j = 0; j < ctx.J(); ++j) {
    const CellStats& c = ctx.data.cell(j, ti);
    if (c.n == 0) continue;
    const auto x = ctx.data.x(j, ti);
    const double w = c.n * inv_sigma;
    g.precision.noalias() += w * x * x.transpose();
    g.linear.noalias() += w * (c.mean - svc_term(s, ctx, j, ti) - s.u[t](j)) * x;
  }
  return g;
}

GaussianCanonical u_t_conditional(int t, const ModelState& s, const ModelContext& ctx) {
  check_time(t, ctx);
  const int ti = t - 1;
  const int J = ctx.J();
  const bool last = t == ctx.T();
  const double rho = s.rho_omega;
  const double w_prev = 1.0 / s.tau_sq_omega[ti];
  const double w_next = last ? 0.0 : 1.0 / s.tau_sq_omega[ti + 1];

  GaussianCanonical g{Eigen::MatrixXd::Zero(J, J), Eigen::VectorXd::Zero(J)};
  add_scaled_precision(ctx.graph(), rho, w_prev + w_next, g.precision);
  Eigen::VectorXd anchor = w_prev * s.u[t - 1];
  if (!last) anchor += w_next * s.u[t + 1];
  g.linear = precision_times(ctx.graph(), rho, anchor);

  const double inv_sigma = 1.0 / s.sigma_sq[ti];
  for (int j = 0; j < J; ++j) {
    const CellStats& c = ctx.data.cell(j, ti);
    if (c.n == 0) continue;
    g.precision(j, j) += c.n * inv_sigma;
    g.linear(j) += c.n * (c.mean - fixed_term(s, ctx, j, ti) - svc_term(s, ctx, j, ti)) * inv_sigma;
  }
  return g;
}

InverseGamma tau_sq_omega_conditional(int t, const ModelState& s, const ModelContext& ctx) {
  check_time(t, ctx);
  const Eigen::VectorXd d = s.u[t] - s.u[t - 1];
  const double qf = precision_quad_form(ctx.graph(), s.rho_omega, 1.0, d, d);
  return {ctx.hyper.a_omega[t - 1] + 0.5 * ctx.J(), ctx.hyper.b_omega[t - 1] + 0.5 * qf};
}

InverseGamma sigma_sq_conditional(int t, const ModelState& s, const ModelContext& ctx) {
  check_time(t, ctx);
  const int ti = t - 1;
  double rss = 0.0;
  for (int j = 0; j < ctx.J(); ++j) {
    const CellStats& c = ctx.data.cell(j, ti);
    if (c.n > 0) rss += c.residual_ss(cell_mu(s, ctx, j, ti));
  }
  return {ctx.hyper.a_sigma + 0.5 * ctx.data.total_count(ti), ctx.hyper.b_sigma + 0.5 * rss};
}

double rho_eta_log_target(int q, double rho, const ModelState& s, const ModelContext& ctx) {
  check_svc(q, ctx);
  if (!(rho > 0.0 && rho < 1.0)) return -std::numeric_limits<double>::infinity();
  const double tau = s.tau_sq_eta[q];
  const double qf = precision_quad_form(ctx.graph(), rho, tau, s.eta_star[q], s.eta_star[q]);
  return -0.5 * log_det_cov(ctx.spatial, rho, tau) - 0.5 * qf + jacobian(rho);
}

double rho_omega_log_target(double rho, const ModelState& s, const ModelContext& ctx) {
  if (!(rho > 0.0 && rho < 1.0)) return -std::numeric_limits<double>::infinity();
  // log|τ²Q(ρ)| = J log τ² - log|D - ρW|; the ρ-dependent part is shared across t.
  const double log_det_precision = -log_det_cov(ctx.spatial, rho, 1.0);
  const double J = ctx.J();
  double out = jacobian(rho);
  for (int t = 1; t <= ctx.T(); ++t) {
    const double tau = s.tau_sq_omega[t - 1];
    const Eigen::VectorXd d = s.u[t] - s.u[t - 1];
    const double qf = precision_quad_form(ctx.graph(), rho, tau, d, d);
    out += -0.5 * (J * std::log(tau) - log_det_precision) - 0.5 * qf;
  }
  return out;
}

// ---- updates ----

void update_beta0(ModelState& s, const ModelContext& ctx, Rng& rng) {
  s.beta[0] = sample(beta0_conditional(s, ctx), rng);
}

void update_eta_star(int k, ModelState& s, const ModelContext& ctx, Rng& rng) {
  s.eta_star[k] = sample(eta_star_conditional(k, s, ctx), rng);
}

void update_tau_sq_eta(int k, ModelState& s, const ModelContext& ctx, Rng& rng) {
  s.tau_sq_eta[k] = sample(tau_sq_eta_conditional(k, s, ctx), rng);
}

void update_sigma_xi(ModelState& s, const ModelContext& ctx, Rng& rng) {
  s.sigma_xi = sample(sigma_xi_conditional(s, ctx), rng);
}

void update_beta_t(int t, ModelState& s, const ModelContext& ctx, Rng& rng) {
  s.beta[t] = sample(beta_t_conditional(t, s, ctx), rng);
}

void update_u_t(int t, ModelState& s, const ModelContext& ctx, Rng& rng) {
  s.u[t] = sample(u_t_conditional(t, s, ctx), rng);
}

void update_tau_sq_omega(int t, ModelState& s, const ModelContext& ctx, Rng& rng) {
  s.tau_sq_omega[t - 1] = sample(tau_sq_omega_conditional(t, s, ctx), rng);
}

void update_sigma_sq(int t, ModelState& s, const ModelContext& ctx, Rng& rng) {
  s.sigma_sq[t - 1] = sample(sigma_sq_conditional(t, s, ctx), rng);
}

bool metropolis_rho_eta(int q, ModelState& s, const ModelContext& ctx, Rng& rng, MetropolisStats::Entry& stats) {
  check_svc(q, ctx);
  double rho = s.rho_eta[q];
  const bool accepted = metropolis_step(
      rho, [&](double r) { return rho_eta_log_target(q, r, s, ctx); }, rng, stats);
  s.rho_eta[q] = rho;
  return accepted;
}

bool metropolis_rho_omega(ModelState& s, const ModelContext& ctx, Rng& rng, MetropolisStats::Entry& stats) {
  double rho = s.rho_omega;
  const bool accepted =
      metropolis_step(rho, [&](double r) { return rho_omega_log_target(r, s, ctx); }, rng, stats);
  s.rho_omega = rho;
  return accepted;
}

namespace {

template <class F>
void guarded(const char* block, int index, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    std::string name = block;
    if (index >= 0) name += "[" + std::to_string(index) + "]";
    throw Error(e.code(), "updating " + name + ": " + e.what());
  }
}

}  // namespace

void gibbs_sweep(ModelState& s, const ModelContext& ctx, Rng& rng, MetropolisStats& stats) {
  const int Q = ctx.Q();
  guarded("beta_0", -1, [&] { update_beta0(s, ctx, rng); });
  for (int k = 0; k < Q; ++k) {
    guarded("eta_star", k + 1, [&] { update_eta_star(k, s, ctx, rng); });
    guarded("tau_sq_eta", k + 1, [&] { update_tau_sq_eta(k, s, ctx, rng); });
  }
  guarded("Sigma_xi", -1, [&] { update_sigma_xi(s, ctx, rng); });
  for (int q = 0; q < Q; ++q)
    guarded("rho_eta", q + 1, [&] { metropolis_rho_eta(q, s, ctx, rng, stats.rho_eta[q]); });
  guarded("rho_omega", -1, [&] { metropolis_rho_omega(s, ctx, rng, stats.rho_omega); });
  for (int t = 1; t <= ctx.T(); ++t) {
    guarded("beta", t, [&] { update_beta_t(t, s, ctx, rng); });
    guarded("u", t, [&] { update_u_t(t, s, ctx, rng); });
    guarded("tau_sq_omega", t, [&] { update_tau_sq_omega(t, s, ctx, rng); });
    guarded("sigma_sq", t, [&] { update_sigma_sq(t, s, ctx, rng); });
  }
}

ModelState initial_state(const ModelContext& ctx) {
  const int J = ctx.J(), T = ctx.T(), P = ctx.P(), Q = ctx.data.num_svc();
  const auto& h = ctx.hyper;
  ModelState s = ModelState::zeros(J, T, P, Q);

  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(P + 1, P + 1);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(P + 1);
  for (int ti = 0; ti < T; ++ti)
    for (int j = 0; j < J; ++j) {
      const CellStats& c = ctx.data.cell(j, ti);
      if (c.n == 0) continue;
      const auto x = ctx.data.x(j, ti);
      xtx.noalias() += c.n * x * x.transpose();
      xty.noalias() += c.sum() * x;
    }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(P + 1);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 1e-12 * xtx.diagonal().maxCoeff()) {
    Eigen::VectorXd solved = ldlt.solve(xty);
    if (solved.allFinite()) beta = solved;
  }
  for (auto& b : s.beta) b = beta;

  const auto prior_mean = [](double a, double b) { return InverseGamma{a, b}.mean(); };
  for (int q = 0; q < Q; ++q) {
    s.tau_sq_eta[q] = prior_mean(h.a_eta[q], h.b_eta[q]);
    s.rho_eta[q] = 0.5;
  }
  for (int t = 0; t < T; ++t) {
    s.tau_sq_omega[t] = prior_mean(h.a_omega[t], h.b_omega[t]);
    s.sigma_sq[t] = prior_mean(h.a_sigma, h.b_sigma);
  }
  s.rho_omega = 0.5;
  const double dof = h.nu_xi - P - 2;
  s.sigma_xi = dof > 0.0 ? Eigen::MatrixXd(h.H_xi / dof) : h.H_xi;
  return s;
}

ChainResult run_chain(const ModelContext& ctx, const McmcConfig& config, std::uint64_t seed,
                      std::optional<ModelState> start) {
  config.validate();
  const int Q = ctx.data.num_svc();
  ModelState state = start ? std::move(*start) : initial_state(ctx);
  state.validate(ctx.J(), ctx.T(), ctx.P(), Q);

  ChainResult out{PosteriorDraws::allocate(ctx.J(), ctx.T(), ctx.P(), Q, config.retained()),
                  MetropolisStats::create(ctx.Q(), config), ModelState{}, Rng(seed)};
  out.draws.total_iterations = config.total_iterations;
  out.draws.burn_in = config.burn_in;
  out.draws.thin = config.thin;
  out.draws.variant = ctx.variant;

  int stored = 0;
  for (int iter = 0; iter < config.total_iterations; ++iter) {
    try {
      gibbs_sweep(state, ctx, out.rng, out.stats);
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(iter + 1) + ", " + e.what());
    }
    if (config.adapt_during_burnin && iter < config.burn_in && (iter + 1) % config.adapt_interval == 0) {
      for (auto& e : out.stats.rho_eta) e.adapt(config.target_acceptance);
      out.stats.rho_omega.adapt(config.target_acceptance);
    }
    if (iter >= config.burn_in && (iter - config.burn_in + 1) % config.thin == 0)
      out.draws.store(stored++, state, derive_mu(state, ctx.data, ctx.variant));
  }
  out.final_state = std::move(state);
  return out;
}

FitResult fit_model(const Dataset& data, const CarEigenSystem& spatial, const Hyperparameters& hyper,
                    const McmcConfig& config) {
  config.validate();
  hyper.validate(data.num_covariates(), data.num_svc(), data.num_times());
  if (spatial.num_areas() != data.num_areas())
    fail(ErrorCode::DimensionMismatch, "adjacency has " + std::to_string(spatial.num_areas()) +
                                           " areas but the data have " + std::to_string(data.num_areas()));
  const ModelContext ctx{data, spatial, hyper, config.variant()};

  std::vector<std::optional<ChainResult>> results(static_cast<std::size_t>(config.chains));
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto run = [&](int c) {
    try {
      results[c] = run_chain(ctx, config, derive_seed(config.seed, static_cast<std::uint64_t>(c)));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  const int workers = std::min(config.workers, config.chains);
  if (workers <= 1) {
    for (int c = 0; c < config.chains && !error; ++c) run(c);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int c = w; c < config.chains; c += workers) run(c);
      });
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  FitResult fit;
  std::vector<PosteriorDraws> parts;
  for (auto& r : results) {
    parts.push_back(std::move(r->draws));
    fit.stats.push_back(std::move(r->stats));
    fit.final_states.push_back(std::move(r->final_state));
    fit.final_rngs.push_back(std::move(r->rng));
  }
  fit.draws = PosteriorDraws::concatenate(parts);
  fit.draws.check_finite();
  if (data.num_times() >= 2) fit.draws.theta = trend_draws(fit.draws);
  return fit;
}

namespace {
constexpr char kCheckpointMagic[9] = "STSAECKP";
constexpr std::uint64_t kCheckpointVersion = 1;
}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& cp) {
  binary::write_magic(out, kCheckpointMagic, kCheckpointVersion);
  binary::write_i64(out, cp.iteration);
  binary::write_u64(out, cp.rng_state.size());
  out.write(cp.rng_state.data(), static_cast<std::streamsize>(cp.rng_state.size()));
  binary::write_doubles(out, cp.step_sizes);
  write_state(out, cp.state);
  if (!out) fail(ErrorCode::IoError, "failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  binary::expect_magic(in, kCheckpointMagic, kCheckpointVersion);
  Checkpoint cp;
  cp.iteration = static_cast<long>(binary::read_i64(in));
  const auto n = binary::read_u64(in);
  if (n > (1u << 20)) fail(ErrorCode::ParseError, "corrupt checkpoint: generator state too large");
  cp.rng_state.resize(n);
  in.read(cp.rng_state.data(), static_cast<std::streamsize>(n));
  if (!in) fail(ErrorCode::ParseError, "truncated checkpoint");
  cp.step_sizes = binary::read_doubles(in);
  cp.state = read_state(in);
  return cp;
}

}  // namespace stsae
