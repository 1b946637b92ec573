#include "stsae/model.hpp"

#include "binary.hpp"
#include "stsae/error.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace stsae {

namespace {

void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) fail(code, message);
}

bool is_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

Dataset::Dataset(int num_areas, int num_times, Eigen::MatrixXd x, Eigen::MatrixXd x_svc,
                 std::vector<Observation> observations)
    : J_(num_areas), T_(num_times), x_(std::move(x)), x_svc_(std::move(x_svc)),
      observations_(std::move(observations)) {
  require(J_ > 0 && T_ > 0, ErrorCode::DimensionMismatch, "dataset needs J > 0 and T > 0");
  const auto cells = static_cast<Eigen::Index>(J_) * T_;
  require(x_.rows() >= 1 && x_.cols() == cells, ErrorCode::DimensionMismatch,
          "covariate matrix must be (P+1) x (J*T)");
  require(x_svc_.cols() == cells || (x_svc_.rows() == 0), ErrorCode::DimensionMismatch,
          "space-varying covariate matrix must be Q x (J*T)");
  if (x_svc_.rows() == 0) x_svc_.resize(0, cells);
  require(x_svc_.rows() <= x_.rows() - 1, ErrorCode::DimensionMismatch,
          "more space-varying covariates than covariates (Q > P)");
  for (Eigen::Index c = 0; c < cells; ++c)
    require(x_(0, c) == 1.0, ErrorCode::DimensionMismatch, "first covariate row must be the intercept (all ones)");
  require(x_.allFinite() && x_svc_.allFinite(), ErrorCode::NonNumeric, "covariates must be finite");

  values_.assign(static_cast<std::size_t>(cells), {});
  for (const auto& obs : observations_) {
    require(obs.area >= 0 && obs.area < J_ && obs.time >= 0 && obs.time < T_, ErrorCode::DimensionMismatch,
            "observation outside the area/time grid");
    require(std::isfinite(obs.value), ErrorCode::NonNumeric, "observation value is not finite");
    values_[cell_index(obs.area, obs.time)].push_back(obs.value);
  }
  stats_.resize(values_.size());
  time_totals_.assign(T_, 0);
  for (std::size_t c = 0; c < values_.size(); ++c) {
    const auto& v = values_[c];
    CellStats s;
    s.n = static_cast<int>(v.size());
    if (s.n > 0) {
      double sum = 0.0;
      for (double y : v) sum += y;
      s.mean = sum / s.n;
      for (double y : v) s.centered_ss += (y - s.mean) * (y - s.mean);
    }
    stats_[c] = s;
    time_totals_[c / J_] += s.n;
  }
}

Dataset Dataset::without_svc() const {
  return Dataset(J_, T_, x_, Eigen::MatrixXd(0, x_.cols()), observations_);
}

Hyperparameters Hyperparameters::defaults(int P, int Q, int T) {
  Hyperparameters h;
  h.a_eta.assign(Q, 2.0);
  h.b_eta.assign(Q, 100.0);
  h.a_omega.assign(T, 2.0);
  h.b_omega.assign(T, 100.0);
  h.nu_xi = 10.0;
  h.H_xi = 100.0 * Eigen::MatrixXd::Identity(P + 1, P + 1);
  h.mu0 = Eigen::VectorXd::Zero(P + 1);
  h.Sigma0 = 100.0 * Eigen::MatrixXd::Identity(P + 1, P + 1);
  return h;
}

void Hyperparameters::validate(int P, int Q, int T) const {
  const auto bad = [](const std::string& m) { fail(ErrorCode::InvalidConfig, m); };
  if (!(a_sigma > 0 && b_sigma > 0)) bad("a_sigma and b_sigma must be positive");
  if (static_cast<int>(a_eta.size()) != Q || static_cast<int>(b_eta.size()) != Q)
    bad("a_eta/b_eta need one entry per space-varying covariate");
  if (static_cast<int>(a_omega.size()) != T || static_cast<int>(b_omega.size()) != T)
    bad("a_omega/b_omega need one entry per time step");
  for (int q = 0; q < Q; ++q)
    if (!(a_eta[q] > 0 && b_eta[q] > 0)) bad("a_eta and b_eta must be positive");
  for (int t = 0; t < T; ++t)
    if (!(a_omega[t] > 0 && b_omega[t] > 0)) bad("a_omega and b_omega must be positive");
  if (!(nu_xi > P)) bad("nu_xi must exceed P");
  if (H_xi.rows() != P + 1 || mu0.size() != P + 1 || Sigma0.rows() != P + 1) bad("H_xi, mu0 and Sigma0 must have dimension P+1");
  if (!is_spd(H_xi)) bad("H_xi must be symmetric positive definite");
  if (!is_spd(Sigma0)) bad("Sigma0 must be symmetric positive definite");
}

ModelState ModelState::zeros(int J, int T, int P, int Q) {
  ModelState s;
  s.beta.assign(T + 1, Eigen::VectorXd::Zero(P + 1));
  s.eta_star.assign(Q, Eigen::VectorXd::Zero(J));
  s.u.assign(T + 1, Eigen::VectorXd::Zero(J));
  s.sigma_xi = Eigen::MatrixXd::Identity(P + 1, P + 1);
  s.tau_sq_eta.assign(Q, 1.0);
  s.rho_eta.assign(Q, 0.5);
  s.tau_sq_omega.assign(T, 1.0);
  s.rho_omega = 0.5;
  s.sigma_sq.assign(T, 1.0);
  return s;
}

void ModelState::validate(int J, int T, int P, int Q) const {
  const auto dim = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::DimensionMismatch, std::string("model state: ") + what);
  };
  dim(static_cast<int>(beta.size()) == T + 1, "beta needs T+1 entries");
  for (const auto& b : beta) dim(b.size() == P + 1, "beta_t length must be P+1");
  dim(static_cast<int>(eta_star.size()) == Q, "eta_star needs Q entries");
  for (const auto& e : eta_star) dim(e.size() == J, "eta_star length must be J");
  dim(static_cast<int>(u.size()) == T + 1, "u needs T+1 entries");
  for (const auto& v : u) dim(v.size() == J, "u_t length must be J");
  dim(sigma_xi.rows() == P + 1 && sigma_xi.cols() == P + 1, "Sigma_xi must be (P+1)x(P+1)");
  dim(static_cast<int>(tau_sq_eta.size()) == Q && static_cast<int>(rho_eta.size()) == Q, "eta variance terms need Q entries");
  dim(static_cast<int>(tau_sq_omega.size()) == T && static_cast<int>(sigma_sq.size()) == T, "time variances need T entries");

  const auto domain = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::InvalidConfig, std::string("model state: ") + what);
  };
  domain(u[0].isZero(0.0), "u_0 must be identically zero");
  for (double v : tau_sq_eta) domain(v > 0, "tau_sq_eta must be positive");
  for (double v : tau_sq_omega) domain(v > 0, "tau_sq_omega must be positive");
  for (double v : sigma_sq) domain(v > 0, "sigma_sq must be positive");
  for (double r : rho_eta) domain(r > 0 && r < 1, "rho_eta must lie in (0, 1)");
  domain(rho_omega > 0 && rho_omega < 1, "rho_omega must lie in (0, 1)");
}

bool operator==(const ModelState& a, const ModelState& b) {
  const auto same = [](const std::vector<Eigen::VectorXd>& x, const std::vector<Eigen::VectorXd>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].size() != y[i].size() || x[i] != y[i]) return false;
    return true;
  };
  return same(a.beta, b.beta) && same(a.eta_star, b.eta_star) && same(a.u, b.u) &&
         a.sigma_xi.rows() == b.sigma_xi.rows() && a.sigma_xi == b.sigma_xi && a.tau_sq_eta == b.tau_sq_eta &&
         a.rho_eta == b.rho_eta && a.tau_sq_omega == b.tau_sq_omega && a.rho_omega == b.rho_omega &&
         a.sigma_sq == b.sigma_sq;
}

namespace {
constexpr char kStateMagic[9] = "STSAEMST";
constexpr std::uint64_t kStateVersion = 1;

void write_vectors(std::ostream& out, const std::vector<Eigen::VectorXd>& vs) {
  binary::write_u64(out, vs.size());
  for (const auto& v : vs) binary::write_vector(out, v);
}
std::vector<Eigen::VectorXd> read_vectors(std::istream& in) {
  const auto n = binary::read_u64(in);
  if (n > (1u << 24)) fail(ErrorCode::ParseError, "implausible vector count in state");
  std::vector<Eigen::VectorXd> vs(n);
  for (auto& v : vs) v = binary::read_vector(in);
  return vs;
}
}  // namespace

void write_state(std::ostream& out, const ModelState& s) {
  binary::write_magic(out, kStateMagic, kStateVersion);
  write_vectors(out, s.beta);
  write_vectors(out, s.eta_star);
  write_vectors(out, s.u);
  binary::write_matrix(out, s.sigma_xi);
  binary::write_doubles(out, s.tau_sq_eta);
  binary::write_doubles(out, s.rho_eta);
  binary::write_doubles(out, s.tau_sq_omega);
  binary::write_f64(out, s.rho_omega);
  binary::write_doubles(out, s.sigma_sq);
}

ModelState read_state(std::istream& in) {
  binary::expect_magic(in, kStateMagic, kStateVersion);
  ModelState s;
  s.beta = read_vectors(in);
  s.eta_star = read_vectors(in);
  s.u = read_vectors(in);
  s.sigma_xi = binary::read_matrix(in);
  s.tau_sq_eta = binary::read_doubles(in);
  s.rho_eta = binary::read_doubles(in);
  s.tau_sq_omega = binary::read_doubles(in);
  s.rho_omega = binary::read_f64(in);
  s.sigma_sq = binary::read_doubles(in);
  return s;
}

Eigen::MatrixXd derive_mu(const ModelState& state, const Dataset& data, ModelVariant variant) {
  const int J = data.num_areas();
  const int T = data.num_times();
  const int P = data.num_covariates();
  const int Q = variant == ModelVariant::Full ? data.num_svc() : 0;
  if (static_cast<int>(state.beta.size()) != T + 1 || static_cast<int>(state.u.size()) != T + 1 ||
      state.beta[0].size() != P + 1 || state.u[0].size() != J ||
      (Q > 0 && static_cast<int>(state.eta_star.size()) < Q))
    fail(ErrorCode::DimensionMismatch, "model state does not match dataset dimensions");

  Eigen::MatrixXd mu(J, T);
  for (int ti = 0; ti < T; ++ti) {
    const auto& beta = state.beta[ti + 1];
    const auto& u = state.u[ti + 1];
    for (int j = 0; j < J; ++j) {
      double m = data.x(j, ti).dot(beta) + u(j);
      for (int q = 0; q < Q; ++q) m += data.x_svc(j, ti)(q) * state.eta_star[q](j);
      mu(j, ti) = m;
    }
  }
  return mu;
}

PosteriorDraws PosteriorDraws::allocate(int J, int T, int P, int Q, int S) {
  PosteriorDraws d;
  d.J = J;
  d.T = T;
  d.P = P;
  d.Q = Q;
  d.retained = S;
  const auto s = static_cast<std::size_t>(S);
  d.mu.assign(s * J * T, 0.0);
  d.sigma_sq.assign(s * T, 0.0);
  d.beta.assign(s * (T + 1) * (P + 1), 0.0);
  d.sigma_xi.assign(s * (P + 1) * (P + 1), 0.0);
  d.eta.assign(s * Q * J, 0.0);
  d.tau_sq_eta.assign(s * Q, 0.0);
  d.rho_eta.assign(s * Q, 0.0);
  d.tau_sq_omega.assign(s * T, 0.0);
  d.rho_omega.assign(s, 0.0);
  return d;
}

void PosteriorDraws::store(int s, const ModelState& state, const Eigen::MatrixXd& mu_matrix) {
  const auto S = static_cast<std::size_t>(s);
  for (int j = 0; j < J; ++j)
    for (int ti = 0; ti < T; ++ti) mu[mu_index(s, j, ti)] = mu_matrix(j, ti);
  for (int ti = 0; ti < T; ++ti) {
    sigma_sq[S * T + ti] = state.sigma_sq[ti];
    tau_sq_omega[S * T + ti] = state.tau_sq_omega[ti];
  }
  for (int t = 0; t <= T; ++t)
    for (int p = 0; p <= P; ++p) beta[(S * (T + 1) + t) * (P + 1) + p] = state.beta[t](p);
  for (int a = 0; a <= P; ++a)
    for (int b = 0; b <= P; ++b) sigma_xi[(S * (P + 1) + a) * (P + 1) + b] = state.sigma_xi(a, b);
  for (int q = 0; q < Q; ++q) {
    for (int j = 0; j < J; ++j) eta[(S * Q + q) * J + j] = state.eta_star[q](j);
    tau_sq_eta[S * Q + q] = state.tau_sq_eta[q];
    rho_eta[S * Q + q] = state.rho_eta[q];
  }
  rho_omega[S] = state.rho_omega;
}

PosteriorDraws PosteriorDraws::concatenate(const std::vector<PosteriorDraws>& parts) {
  if (parts.empty()) fail(ErrorCode::MisalignedDraws, "no draws to concatenate");
  PosteriorDraws out = parts.front();
  out.chains = 0;
  out.retained = 0;
  for (auto* v : {&out.mu, &out.theta, &out.sigma_sq, &out.beta, &out.sigma_xi, &out.eta, &out.tau_sq_eta,
                  &out.rho_eta, &out.tau_sq_omega, &out.rho_omega})
    v->clear();
  for (const auto& p : parts) {
    if (p.J != out.J || p.T != out.T || p.P != out.P || p.Q != out.Q)
      fail(ErrorCode::MisalignedDraws, "chains have different dimensions");
    out.retained += p.retained;
    out.chains += p.chains;
    const auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
      dst.insert(dst.end(), src.begin(), src.end());
    };
    append(out.mu, p.mu);
    append(out.theta, p.theta);
    append(out.sigma_sq, p.sigma_sq);
    append(out.beta, p.beta);
    append(out.sigma_xi, p.sigma_xi);
    append(out.eta, p.eta);
    append(out.tau_sq_eta, p.tau_sq_eta);
    append(out.rho_eta, p.rho_eta);
    append(out.tau_sq_omega, p.tau_sq_omega);
    append(out.rho_omega, p.rho_omega);
  }
  return out;
}

void PosteriorDraws::check_finite() const {
  if (retained <= 0) fail(ErrorCode::MisalignedDraws, "posterior draws are empty");
  for (double v : mu)
    if (!std::isfinite(v)) fail(ErrorCode::CholeskyFailure, "non-finite mu draw");
}

namespace {
constexpr char kDrawsMagic[9] = "STSAEDRW";
constexpr std::uint64_t kDrawsVersion = 1;
}  // namespace

void write_draws(std::ostream& out, const PosteriorDraws& d) {
  binary::write_magic(out, kDrawsMagic, kDrawsVersion);
  for (std::int64_t v : {std::int64_t{d.J}, std::int64_t{d.T}, std::int64_t{d.P}, std::int64_t{d.Q},
                         std::int64_t{d.retained}, std::int64_t{d.chains}, std::int64_t{d.total_iterations},
                         std::int64_t{d.burn_in}, std::int64_t{d.thin},
                         std::int64_t{d.variant == ModelVariant::Sub ? 1 : 0}})
    binary::write_i64(out, v);
  for (const auto* v : {&d.mu, &d.theta, &d.sigma_sq, &d.beta, &d.sigma_xi, &d.eta, &d.tau_sq_eta, &d.rho_eta,
                        &d.tau_sq_omega, &d.rho_omega})
    binary::write_doubles(out, *v);
  if (!out) fail(ErrorCode::IoError, "failed writing posterior draws");
}

PosteriorDraws read_draws(std::istream& in) {
  binary::expect_magic(in, kDrawsMagic, kDrawsVersion);
  PosteriorDraws d;
  d.J = static_cast<int>(binary::read_i64(in));
  d.T = static_cast<int>(binary::read_i64(in));
  d.P = static_cast<int>(binary::read_i64(in));
  d.Q = static_cast<int>(binary::read_i64(in));
  d.retained = static_cast<int>(binary::read_i64(in));
  d.chains = static_cast<int>(binary::read_i64(in));
  d.total_iterations = static_cast<int>(binary::read_i64(in));
  d.burn_in = static_cast<int>(binary::read_i64(in));
  d.thin = static_cast<int>(binary::read_i64(in));
  d.variant = binary::read_i64(in) == 1 ? ModelVariant::Sub : ModelVariant::Full;
  for (auto* v : {&d.mu, &d.theta, &d.sigma_sq, &d.beta, &d.sigma_xi, &d.eta, &d.tau_sq_eta, &d.rho_eta,
                  &d.tau_sq_omega, &d.rho_omega})
    *v = binary::read_doubles(in);
  const auto S = static_cast<std::size_t>(d.retained);
  if (d.J <= 0 || d.T <= 0 || d.retained <= 0 || d.mu.size() != S * d.J * d.T || d.sigma_sq.size() != S * d.T)
    fail(ErrorCode::MisalignedDraws, "posterior draw arrays do not match header dimensions");
  return d;
}

}  // namespace stsae
