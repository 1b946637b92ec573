#pragma once

#include "stsae/distributions.hpp"
#include "stsae/graph.hpp"
#include "stsae/model.hpp"
#include "stsae/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stsae {

struct McmcConfig {
  int total_iterations = 7500;
  int burn_in = 5000;
  int thin = 1;
  /// Initial random-walk sd on the logit scale, one per space-varying covariate.
  /// Missing entries default to 0.5.
  std::vector<double> proposal_sd_rho_eta;
  double proposal_sd_rho_omega = 0.5;
  bool adapt_during_burnin = true;
  int adapt_interval = 100;
  double target_acceptance = 0.43;
  std::uint64_t seed = 1;
  bool sub_model = false;
  int chains = 1;
  /// Threads used to run chains; 1 runs them sequentially.
  int workers = 1;

  int retained() const { return thin > 0 ? (total_iterations - burn_in) / thin : 0; }
  ModelVariant variant() const { return sub_model ? ModelVariant::Sub : ModelVariant::Full; }
  /// Throws InvalidConfig unless burn_in < M, thin > 0 and S > 0.
  void validate() const;
};

struct MetropolisStats {
  struct Entry {
    std::string name;
    long proposals = 0;
    long accepts = 0;
    double step_size = 0.5;
    long batch_proposals = 0;
    long batch_accepts = 0;
    int batches = 0;

    double acceptance_rate() const { return proposals > 0 ? static_cast<double>(accepts) / proposals : 0.0; }
    void record(bool accepted);
    /// Moves log(step) by ±min(0.1, 1/sqrt(batches)) toward the target rate and
    /// clears the batch counters.
    void adapt(double target);
  };

  std::vector<Entry> rho_eta;
  Entry rho_omega{"rho_omega"};

  static MetropolisStats create(int Q, const McmcConfig& config);
};

/// Read-only problem definition shared by every step of a chain.
struct ModelContext {
  const Dataset& data;
  const CarEigenSystem& spatial;
  const Hyperparameters& hyper;
  ModelVariant variant = ModelVariant::Full;

  int J() const { return data.num_areas(); }
  int T() const { return data.num_times(); }
  int P() const { return data.num_covariates(); }
  /// Effective number of space-varying covariates (0 for the sub-model).
  int Q() const { return variant == ModelVariant::Full ? data.num_svc() : 0; }
  const AdjacencyGraph& graph() const { return spatial.graph(); }
};

// Full conditionals. Model time arguments `t` run over 1..T.

GaussianCanonical beta0_conditional(const ModelState& s, const ModelContext& ctx);
GaussianCanonical eta_star_conditional(int k, const ModelState& s, const ModelContext& ctx);
InverseGamma tau_sq_eta_conditional(int k, const ModelState& s, const ModelContext& ctx);
InverseWishart sigma_xi_conditional(const ModelState& s, const ModelContext& ctx);
GaussianCanonical beta_t_conditional(int t, const ModelState& s, const ModelContext& ctx);
GaussianCanonical u_t_conditional(int t, const ModelState& s, const ModelContext& ctx);
InverseGamma tau_sq_omega_conditional(int t, const ModelState& s, const ModelContext& ctx);
InverseGamma sigma_sq_conditional(int t, const ModelState& s, const ModelContext& ctx);

/// Log target for ρ_{η,q} on the logit scale: CAR density of η*_q plus the
/// Jacobian log ρ + log(1 - ρ). Returns -inf outside (0, 1).
double rho_eta_log_target(int q, double rho, const ModelState& s, const ModelContext& ctx);
/// Same for ρ_ω, summing the CAR densities of the increments u_t - u_{t-1}.
double rho_omega_log_target(double rho, const ModelState& s, const ModelContext& ctx);

// Updates.

void update_beta0(ModelState& s, const ModelContext& ctx, Rng& rng);
void update_eta_star(int k, ModelState& s, const ModelContext& ctx, Rng& rng);
void update_tau_sq_eta(int k, ModelState& s, const ModelContext& ctx, Rng& rng);
void update_sigma_xi(ModelState& s, const ModelContext& ctx, Rng& rng);
void update_beta_t(int t, ModelState& s, const ModelContext& ctx, Rng& rng);
void update_u_t(int t, ModelState& s, const ModelContext& ctx, Rng& rng);
void update_tau_sq_omega(int t, ModelState& s, const ModelContext& ctx, Rng& rng);
void update_sigma_sq(int t, ModelState& s, const ModelContext& ctx, Rng& rng);

/// Random-walk Metropolis step on logit(ρ). Returns whether the proposal was accepted.
bool metropolis_rho_eta(int q, ModelState& s, const ModelContext& ctx, Rng& rng, MetropolisStats::Entry& stats);
bool metropolis_rho_omega(ModelState& s, const ModelContext& ctx, Rng& rng, MetropolisStats::Entry& stats);

/// One sweep: β_0; (η*_k, τ²_{η,k}) for each k; Σ_ξ; ρ_{η,q}; ρ_ω; then for
/// t = 1..T: β_t, u_t, τ²_{ω,t}, σ²_t. Errors are rethrown naming the block.
void gibbs_sweep(ModelState& s, const ModelContext& ctx, Rng& rng, MetropolisStats& stats);

/// Pooled least-squares β, zero η and u, variances at prior means, ρ = 0.5,
/// Σ_ξ at the inverse-Wishart prior mean.
ModelState initial_state(const ModelContext& ctx);

struct ChainResult {
  PosteriorDraws draws;
  MetropolisStats stats;
  ModelState final_state;
  Rng rng;
};

/// Runs one chain of config.total_iterations sweeps, keeping every thin-th
/// sweep after burn-in. `seed` seeds this chain's generator.
ChainResult run_chain(const ModelContext& ctx, const McmcConfig& config, std::uint64_t seed,
                      std::optional<ModelState> start = std::nullopt);

struct FitResult {
  PosteriorDraws draws;  // all chains concatenated, trends filled in when T >= 2
  std::vector<MetropolisStats> stats;
  std::vector<ModelState> final_states;
  std::vector<Rng> final_rngs;
};

/// Runs config.chains chains seeded by derive_seed(config.seed, chain).
FitResult fit_model(const Dataset& data, const CarEigenSystem& spatial, const Hyperparameters& hyper,
                    const McmcConfig& config);

/// Chain checkpoint: model state, generator state and tuned step sizes.
struct Checkpoint {
  long iteration = 0;
  ModelState state;
  std::string rng_state;
  std::vector<double> step_sizes;  // rho_eta..., rho_omega
};

void write_checkpoint(std::ostream& out, const Checkpoint& cp);
Checkpoint read_checkpoint(std::istream& in);

}  // namespace stsae
