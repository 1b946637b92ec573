#include "stsae/distributions.hpp"

#include "stsae/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace stsae {

GaussianSampler::GaussianSampler(const GaussianCanonical& g) : llt_(g.precision) {
  if (g.precision.rows() != g.linear.size())
    fail(ErrorCode::DimensionMismatch, "canonical Gaussian precision and linear term disagree");
  if (llt_.info() != Eigen::Success || !g.precision.allFinite())
    fail(ErrorCode::CholeskyFailure, "full-conditional precision is not positive definite");
  mean_ = llt_.solve(g.linear);
  if (!mean_.allFinite()) fail(ErrorCode::CholeskyFailure, "full-conditional mean is not finite");
}

Eigen::MatrixXd GaussianSampler::covariance() const {
  return llt_.solve(Eigen::MatrixXd::Identity(mean_.size(), mean_.size()));
}

Eigen::VectorXd GaussianSampler::sample(Rng& rng) const {
  Eigen::VectorXd z(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean_ + llt_.matrixU().solve(z);
}

double GaussianSampler::log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd d = x - mean_;
  const Eigen::VectorXd Ld = llt_.matrixU() * d;  // Lᵀ d
  const double log_det_precision = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  return -0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + 0.5 * log_det_precision -
         0.5 * Ld.squaredNorm();
}

Eigen::VectorXd sample(const GaussianCanonical& g, Rng& rng) { return GaussianSampler(g).sample(rng); }

double log_density(const GaussianCanonical& g, const Eigen::VectorXd& x) { return GaussianSampler(g).log_density(x); }

double sample(const InverseGamma& d, Rng& rng) { return d.scale / rng.gamma(d.shape); }

double log_density(const InverseGamma& d, double x) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return d.shape * std::log(d.scale) - std::lgamma(d.shape) - (d.shape + 1.0) * std::log(x) - d.scale / x;
}

double log_multivariate_gamma(double a, int p) {
  double out = 0.25 * p * (p - 1) * std::log(std::numbers::pi);
  for (int i = 1; i <= p; ++i) out += std::lgamma(a + 0.5 * (1 - i));
  return out;
}

Eigen::MatrixXd InverseWishart::mean() const {
  const auto p = static_cast<double>(scale.rows());
  return df > p + 1.0 ? Eigen::MatrixXd(scale / (df - p - 1.0)) : scale;
}

Eigen::MatrixXd sample(const InverseWishart& d, Rng& rng) {
  const auto p = d.scale.rows();
  // Bartlett: Σ⁻¹ = L^{-T} A Aᵀ L^{-1} with L Lᵀ = scale, hence Σ = B Bᵀ, B = L A^{-T}.
  Eigen::LLT<Eigen::MatrixXd> llt(d.scale);
  if (llt.info() != Eigen::Success) fail(ErrorCode::CholeskyFailure, "inverse-Wishart scale is not positive definite");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(d.df - static_cast<double>(i)));
    for (Eigen::Index k = 0; k < i; ++k) A(i, k) = rng.normal();
  }
  const Eigen::MatrixXd L = llt.matrixL();
  // Bᵀ = A^{-1} Lᵀ
  const Eigen::MatrixXd Bt = A.triangularView<Eigen::Lower>().solve(L.transpose());
  Eigen::MatrixXd sigma = Bt.transpose() * Bt;
  return 0.5 * (sigma + sigma.transpose());
}

double log_density(const InverseWishart& d, const Eigen::MatrixXd& sigma) {
  const auto p = static_cast<int>(d.scale.rows());
  Eigen::LLT<Eigen::MatrixXd> sig(sigma);
  Eigen::LLT<Eigen::MatrixXd> psi(d.scale);
  if (sig.info() != Eigen::Success || psi.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& f) {
    return 2.0 * f.matrixLLT().diagonal().array().log().sum();
  };
  const double trace = sig.solve(d.scale).trace();
  return 0.5 * d.df * logdet(psi) - 0.5 * d.df * p * std::log(2.0) - log_multivariate_gamma(0.5 * d.df, p) -
         0.5 * (d.df + p + 1.0) * logdet(sig) - 0.5 * trace;
}

}  // namespace stsae
