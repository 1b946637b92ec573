#include "stsae/graph.hpp"

#include "stsae/error.hpp"
#include "stsae/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace stsae {

AdjacencyGraph::AdjacencyGraph(std::vector<std::vector<int>> neighbors, std::vector<std::string> names)
    : neighbors_(neighbors.size()), names_(std::move(names)) {
  const int J = static_cast<int>(neighbors.size());
  if (J == 0) fail(ErrorCode::DimensionMismatch, "adjacency graph has no areas");
  if (names_.empty()) {
    names_.reserve(J);
    for (int j = 0; j < J; ++j) names_.push_back(std::to_string(j));
  }
  if (static_cast<int>(names_.size()) != J)
    fail(ErrorCode::DimensionMismatch, "area name count does not match neighbor lists");

  for (int j = 0; j < J; ++j) {
    for (int k : neighbors[j]) {
      if (k < 0 || k >= J) fail(ErrorCode::UnknownArea, "neighbor index " + std::to_string(k) + " out of range");
      if (k == j) fail(ErrorCode::SelfLoop, "area '" + names_[j] + "' lists itself as a neighbor");
      neighbors_[j].push_back(k);
      neighbors_[k].push_back(j);
    }
  }
  for (int j = 0; j < J; ++j) {
    auto& nb = neighbors_[j];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    if (nb.empty()) fail(ErrorCode::IslandArea, "area '" + names_[j] + "' has no neighbors");
  }
}

std::size_t AdjacencyGraph::num_edges() const noexcept {
  std::size_t twice = 0;
  for (const auto& nb : neighbors_) twice += nb.size();
  return twice / 2;
}

Eigen::MatrixXd AdjacencyGraph::dense_adjacency() const {
  const int J = num_areas();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(J, J);
  for (int j = 0; j < J; ++j)
    for (int k : neighbors_[j]) W(j, k) = 1.0;
  return W;
}

AdjacencyGraph load_adjacency(const std::vector<Edge>& edges, const AreaIndex& area_index) {
  const int J = static_cast<int>(area_index.size());
  std::vector<std::string> names(J);
  for (const auto& [id, idx] : area_index) {
    if (idx < 0 || idx >= J) fail(ErrorCode::DimensionMismatch, "area index map is not contiguous");
    names[idx] = id;
  }
  auto lookup = [&](const std::string& id) {
    auto it = area_index.find(id);
    if (it == area_index.end()) fail(ErrorCode::UnknownArea, "adjacency references unknown area '" + id + "'");
    return it->second;
  };
  std::vector<std::vector<int>> neighbors(J);
  for (const auto& [a, b] : edges) {
    const int ia = lookup(a);
    const int ib = lookup(b);
    if (ia == ib) fail(ErrorCode::SelfLoop, "edge joins area '" + a + "' to itself");
    neighbors[ia].push_back(ib);
  }
  return AdjacencyGraph(std::move(neighbors), std::move(names));
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open adjacency file " + path.string());
  std::vector<Edge> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto fields = split(body, ',');
    if (fields.size() != 2 || trim(fields[0]).empty() || trim(fields[1]).empty())
      fail(ErrorCode::ParseError,
           path.string() + ":" + std::to_string(line_no) + ": expected two area identifiers separated by a comma");
    edges.emplace_back(std::string(trim(fields[0])), std::string(trim(fields[1])));
  }
  return edges;
}

AdjacencyGraph path_graph(int n) {
  std::vector<std::vector<int>> nb(n);
  for (int j = 0; j + 1 < n; ++j) nb[j].push_back(j + 1);
  return AdjacencyGraph(std::move(nb));
}

AdjacencyGraph lattice_graph(int rows, int cols) {
  std::vector<std::vector<int>> nb(rows * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int j = r * cols + c;
      if (c + 1 < cols) nb[j].push_back(j + 1);
      if (r + 1 < rows) nb[j].push_back(j + cols);
    }
  }
  return AdjacencyGraph(std::move(nb));
}

CarEigenSystem::CarEigenSystem(AdjacencyGraph graph) : graph_(std::move(graph)) {
  const int J = graph_.num_areas();
  degrees_.resize(J);
  for (int j = 0; j < J; ++j) degrees_(j) = graph_.degree(j);
  const Eigen::VectorXd inv_sqrt_d = degrees_.cwiseSqrt().cwiseInverse();

  Eigen::MatrixXd scaled = Eigen::MatrixXd::Zero(J, J);
  for (int j = 0; j < J; ++j)
    for (int k : graph_.neighbors(j)) scaled(j, k) = inv_sqrt_d(j) * inv_sqrt_d(k);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scaled);
  if (solver.info() != Eigen::Success)
    fail(ErrorCode::EigenFailure, "symmetric eigensolver did not converge for J=" + std::to_string(J));
  eigenvalues_ = solver.eigenvalues();
  basis_ = degrees_.cwiseSqrt().asDiagonal() * solver.eigenvectors();
}

CarEigenSystem build_eigen_system(const AdjacencyGraph& graph) { return CarEigenSystem(graph); }

double log_det_cov(const CarEigenSystem& sys, double rho, double tau_sq) {
  if (!(rho >= 0.0 && rho < 1.0))
    fail(ErrorCode::NonPositiveFactor, "spatial dependence rho=" + std::to_string(rho) + " outside [0, 1)");
  if (!(tau_sq > 0.0)) fail(ErrorCode::NonPositiveFactor, "tau_sq must be positive");
  const auto& lambda = sys.eigenvalues();
  const auto& d = sys.degrees();
  double log_factors = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    const double factor = d(j) * (1.0 - rho * lambda(j));
    if (!(factor > 0.0))
      fail(ErrorCode::NonPositiveFactor, "d_j(1 - rho*lambda_j) <= 0 at rho=" + std::to_string(rho));
    log_factors += std::log(factor);
  }
  return -static_cast<double>(lambda.size()) * std::log(1.0 / tau_sq) - log_factors;
}

double precision_quad_form(const AdjacencyGraph& graph, double rho, double tau_sq, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b) {
  const int J = graph.num_areas();
  if (a.size() != J || b.size() != J)
    fail(ErrorCode::DimensionMismatch, "quadratic form vectors must have length " + std::to_string(J));
  double diag = 0.0;
  double off = 0.0;
  for (int j = 0; j < J; ++j) {
    diag += graph.degree(j) * a(j) * b(j);
    double nb_sum = 0.0;
    for (int k : graph.neighbors(j)) nb_sum += b(k);
    off += a(j) * nb_sum;
  }
  return (diag - rho * off) / tau_sq;
}

QuadFormParts quad_form_parts(const AdjacencyGraph& graph, const Eigen::VectorXd& a) {
  QuadFormParts parts;
  for (int j = 0; j < graph.num_areas(); ++j) {
    parts.degree_part += graph.degree(j) * a(j) * a(j);
    double nb_sum = 0.0;
    for (int k : graph.neighbors(j)) nb_sum += a(k);
    parts.adjacency_part += a(j) * nb_sum;
  }
  return parts;
}

Eigen::VectorXd precision_times(const AdjacencyGraph& graph, double rho, const Eigen::VectorXd& x) {
  const int J = graph.num_areas();
  if (x.size() != J) fail(ErrorCode::DimensionMismatch, "vector length does not match graph");
  Eigen::VectorXd out(J);
  for (int j = 0; j < J; ++j) {
    double nb_sum = 0.0;
    for (int k : graph.neighbors(j)) nb_sum += x(k);
    out(j) = graph.degree(j) * x(j) - rho * nb_sum;
  }
  return out;
}

void add_scaled_precision(const AdjacencyGraph& graph, double rho, double scale, Eigen::MatrixXd& out) {
  const int J = graph.num_areas();
  if (out.rows() != J || out.cols() != J) fail(ErrorCode::DimensionMismatch, "precision target has wrong shape");
  const double off = -rho * scale;
  for (int j = 0; j < J; ++j) {
    out(j, j) += scale * graph.degree(j);
    for (int k : graph.neighbors(j)) out(j, k) += off;
  }
}

}  // namespace stsae
