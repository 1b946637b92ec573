#pragma once

#include "stsae/rng.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace stsae {

/// Multivariate normal in "incompleted square" form: precision V⁻¹ and linear
/// term v, so the distribution is MVN(V v, V).
struct GaussianCanonical {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;
};

/// Cholesky factor of a canonical Gaussian; throws CholeskyFailure when the
/// precision is not positive definite.
class GaussianSampler {
 public:
  explicit GaussianSampler(const GaussianCanonical& g);

  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::MatrixXd covariance() const;
  /// mean + L^{-T} z with L Lᵀ = V⁻¹.
  Eigen::VectorXd sample(Rng& rng) const;
  double log_density(const Eigen::VectorXd& x) const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd mean_;
};

Eigen::VectorXd sample(const GaussianCanonical& g, Rng& rng);
double log_density(const GaussianCanonical& g, const Eigen::VectorXd& x);

/// IG(shape, scale): density ∝ x^{-shape-1} exp(-scale / x).
struct InverseGamma {
  double shape = 1.0;
  double scale = 1.0;

  double mean() const { return shape > 1.0 ? scale / (shape - 1.0) : scale; }
};

double sample(const InverseGamma& d, Rng& rng);
double log_density(const InverseGamma& d, double x);

/// IW(df, scale): density ∝ |Σ|^{-(df+p+1)/2} exp(-tr(scale Σ⁻¹)/2).
struct InverseWishart {
  double df = 1.0;
  Eigen::MatrixXd scale;

  Eigen::MatrixXd mean() const;
};

Eigen::MatrixXd sample(const InverseWishart& d, Rng& rng);
double log_density(const InverseWishart& d, const Eigen::MatrixXd& sigma);

double log_multivariate_gamma(double a, int p);

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double inv_logit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace stsae
