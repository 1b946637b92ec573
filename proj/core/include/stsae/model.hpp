#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace stsae {

// Time indexing convention used throughout the library:
//   * Dataset cells use a 0-based time index `ti` in [0, T).
//   * Model time t = ti + 1 runs over 1..T, and t = 0 is the initial state.
//   * ModelState::beta and ModelState::u have T + 1 entries indexed by t.
//   * ModelState::sigma_sq and ModelState::tau_sq_omega have T entries indexed by t - 1.

struct Observation {
  int area = 0;
  int time = 0;  // 0-based
  double value = 0.0;
};

/// Per-cell sufficient statistics of the plot values: count, mean and the
/// centered sum of squares Σ(y - ȳ)².
struct CellStats {
  int n = 0;
  double mean = 0.0;
  double centered_ss = 0.0;

  double sum() const { return n * mean; }
  /// Σ_i (y_i - mu)².
  double residual_ss(double mu) const { return centered_ss + n * (mean - mu) * (mean - mu); }
};

/// Plot observations with complete area-year covariates. Immutable.
class Dataset {
 public:
  /// `x` is (P+1) x (J*T) with the intercept in row 0, `x_svc` is Q x (J*T);
  /// column index of cell (j, ti) is ti * J + j.
  Dataset(int num_areas, int num_times, Eigen::MatrixXd x, Eigen::MatrixXd x_svc,
          std::vector<Observation> observations);

  int num_areas() const noexcept { return J_; }
  int num_times() const noexcept { return T_; }
  /// P, the number of non-intercept covariates.
  int num_covariates() const noexcept { return static_cast<int>(x_.rows()) - 1; }
  /// Q, the number of space-varying covariates.
  int num_svc() const noexcept { return static_cast<int>(x_svc_.rows()); }

  std::size_t cell_index(int j, int ti) const { return static_cast<std::size_t>(ti) * J_ + j; }

  auto x(int j, int ti) const { return x_.col(static_cast<Eigen::Index>(cell_index(j, ti))); }
  auto x_svc(int j, int ti) const { return x_svc_.col(static_cast<Eigen::Index>(cell_index(j, ti))); }
  const Eigen::MatrixXd& x_matrix() const noexcept { return x_; }
  const Eigen::MatrixXd& x_svc_matrix() const noexcept { return x_svc_; }

  const CellStats& cell(int j, int ti) const { return stats_[cell_index(j, ti)]; }
  int count(int j, int ti) const { return cell(j, ti).n; }
  /// N_t, total observations at time index ti.
  int total_count(int ti) const { return time_totals_[ti]; }
  std::size_t num_observations() const noexcept { return observations_.size(); }

  std::span<const double> values(int j, int ti) const { return values_[cell_index(j, ti)]; }
  const std::vector<Observation>& observations() const noexcept { return observations_; }

  /// Same data, restricted to the given space-varying covariate set (used for
  /// the sub-model, which has none).
  Dataset without_svc() const;

 private:
  int J_;
  int T_;
  Eigen::MatrixXd x_;
  Eigen::MatrixXd x_svc_;
  std::vector<Observation> observations_;
  std::vector<std::vector<double>> values_;
  std::vector<CellStats> stats_;
  std::vector<int> time_totals_;
};

struct Hyperparameters {
  double a_sigma = 2.0;
  double b_sigma = 100.0;
  std::vector<double> a_eta, b_eta;      // Q
  std::vector<double> a_omega, b_omega;  // T
  double nu_xi = 10.0;
  Eigen::MatrixXd H_xi;     // (P+1) x (P+1)
  Eigen::VectorXd mu0;      // P+1
  Eigen::MatrixXd Sigma0;   // (P+1) x (P+1)

  /// Vague defaults: IG shapes 2, scales 100, ν_ξ = 10, H_ξ = Σ_0 = 100 I, μ_0 = 0.
  static Hyperparameters defaults(int P, int Q, int T);

  /// Throws InvalidConfig on wrong sizes, non-positive IG parameters,
  /// ν_ξ <= P, or when H_ξ / Σ_0 are not symmetric positive definite.
  void validate(int P, int Q, int T) const;
};

enum class ModelVariant {
  Full,
  /// Drops the space-varying regression term x̃ᵀη.
  Sub,
};

struct ModelState {
  std::vector<Eigen::VectorXd> beta;      // T+1 vectors of length P+1
  std::vector<Eigen::VectorXd> eta_star;  // Q vectors of length J
  std::vector<Eigen::VectorXd> u;         // T+1 vectors of length J, u[0] == 0
  Eigen::MatrixXd sigma_xi;               // (P+1) x (P+1)
  std::vector<double> tau_sq_eta;         // Q
  std::vector<double> rho_eta;            // Q
  std::vector<double> tau_sq_omega;       // T, index t-1
  double rho_omega = 0.5;
  std::vector<double> sigma_sq;           // T, index t-1

  static ModelState zeros(int J, int T, int P, int Q);

  int num_areas() const { return u.empty() ? 0 : static_cast<int>(u.front().size()); }
  int num_times() const { return static_cast<int>(sigma_sq.size()); }

  /// Throws DimensionMismatch or InvalidConfig if shapes or domains are violated.
  void validate(int J, int T, int P, int Q) const;

  friend bool operator==(const ModelState& a, const ModelState& b);
};

/// Bit-exact binary serialization (little-endian IEEE doubles).
void write_state(std::ostream& out, const ModelState& state);
ModelState read_state(std::istream& in);

/// μ_{j,t} = x_{j,t}ᵀβ_t + x̃_{j,t}ᵀη_j + u_{j,t} as a J x T matrix (column = time index).
Eigen::MatrixXd derive_mu(const ModelState& state, const Dataset& data, ModelVariant variant = ModelVariant::Full);

/// Retained posterior draws. All arrays are flat, draw-major.
struct PosteriorDraws {
  int J = 0, T = 0, P = 0, Q = 0;
  int retained = 0;
  int chains = 1;
  int total_iterations = 0, burn_in = 0, thin = 1;
  ModelVariant variant = ModelVariant::Full;

  std::vector<double> mu;            // [S][J][T]
  std::vector<double> theta;         // [S][J] (empty when T < 2)
  std::vector<double> sigma_sq;      // [S][T]
  std::vector<double> beta;          // [S][T+1][P+1]
  std::vector<double> sigma_xi;      // [S][P+1][P+1]
  std::vector<double> eta;           // [S][Q][J]
  std::vector<double> tau_sq_eta;    // [S][Q]
  std::vector<double> rho_eta;       // [S][Q]
  std::vector<double> tau_sq_omega;  // [S][T]
  std::vector<double> rho_omega;     // [S]

  std::size_t mu_index(int s, int j, int ti) const {
    return (static_cast<std::size_t>(s) * J + j) * T + ti;
  }
  double mu_at(int s, int j, int ti) const { return mu[mu_index(s, j, ti)]; }
  double sigma_sq_at(int s, int ti) const { return sigma_sq[static_cast<std::size_t>(s) * T + ti]; }
  double beta_at(int s, int t, int p) const {
    return beta[(static_cast<std::size_t>(s) * (T + 1) + t) * (P + 1) + p];
  }

  /// Empty draws with every array sized for S retained samples.
  static PosteriorDraws allocate(int J, int T, int P, int Q, int S);
  void store(int s, const ModelState& state, const Eigen::MatrixXd& mu_matrix);

  /// Concatenates chains (same dimensions required).
  static PosteriorDraws concatenate(const std::vector<PosteriorDraws>& parts);

  void check_finite() const;
};

void write_draws(std::ostream& out, const PosteriorDraws& draws);
PosteriorDraws read_draws(std::istream& in);

}  // namespace stsae
