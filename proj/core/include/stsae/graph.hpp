#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace stsae {

using AreaIndex = std::unordered_map<std::string, int>;
using Edge = std::pair<std::string, std::string>;

/// Binary, symmetric area adjacency with no self-loops and no islands.
class AdjacencyGraph {
 public:
  /// Neighbor lists are symmetrized, sorted and deduplicated. Throws SelfLoop,
  /// UnknownArea (index out of range) or IslandArea.
  explicit AdjacencyGraph(std::vector<std::vector<int>> neighbors,
                          std::vector<std::string> names = {});

  int num_areas() const noexcept { return static_cast<int>(neighbors_.size()); }
  const std::vector<int>& neighbors(int j) const { return neighbors_[j]; }
  int degree(int j) const { return static_cast<int>(neighbors_[j].size()); }
  const std::string& name(int j) const { return names_[j]; }
  std::size_t num_edges() const noexcept;

  /// Dense W, for tests and small problems only.
  Eigen::MatrixXd dense_adjacency() const;

 private:
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::string> names_;
};

AdjacencyGraph load_adjacency(const std::vector<Edge>& edges, const AreaIndex& area_index);

/// Edge-list text file: "idA,idB" per line, '#' comments, blank lines skipped.
std::vector<Edge> read_edge_list(const std::filesystem::path& path);

/// Path graph used in docs and tests: 0-1-2-...-(n-1).
AdjacencyGraph path_graph(int n);

/// Rook-adjacency lattice, areas numbered row-major.
AdjacencyGraph lattice_graph(int rows, int cols);

/// Spectral cache of the scaled adjacency D^{-1/2} W D^{-1/2} = P Λ P^T.
/// Immutable after construction; D - ρW = Σ_j (1 - ρ λ_j) v_j v_j^T with v_j
/// the columns of D^{1/2} P.
class CarEigenSystem {
 public:
  explicit CarEigenSystem(AdjacencyGraph graph);

  int num_areas() const noexcept { return graph_.num_areas(); }
  const AdjacencyGraph& graph() const noexcept { return graph_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::VectorXd& degrees() const noexcept { return degrees_; }
  /// Columns are v_j = D^{1/2} p_j.
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }

 private:
  AdjacencyGraph graph_;
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd degrees_;
  Eigen::MatrixXd basis_;
};

CarEigenSystem build_eigen_system(const AdjacencyGraph& graph);

/// log|τ² Q(ρ)| = J log τ² - Σ_j log(d_j (1 - ρ λ_j)), with Q(ρ) = (D - ρW)^{-1}.
/// Accepts ρ in [0, 1); throws NonPositiveFactor if any factor is not positive.
double log_det_cov(const CarEigenSystem& sys, double rho, double tau_sq);

/// a^T (D - ρW) b / τ², by neighbor traversal.
double precision_quad_form(const AdjacencyGraph& graph, double rho, double tau_sq,
                           const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Split a^T D a and a^T W a so the quadratic form can be re-evaluated for
/// many ρ at O(1) cost: a^T (D - ρW) a = degree_part - ρ * adjacency_part.
struct QuadFormParts {
  double degree_part = 0.0;
  double adjacency_part = 0.0;

  double at(double rho) const { return degree_part - rho * adjacency_part; }
};
QuadFormParts quad_form_parts(const AdjacencyGraph& graph, const Eigen::VectorXd& a);

/// (D - ρW) x.
Eigen::VectorXd precision_times(const AdjacencyGraph& graph, double rho, const Eigen::VectorXd& x);

/// out += scale * (D - ρW).
void add_scaled_precision(const AdjacencyGraph& graph, double rho, double scale, Eigen::MatrixXd& out);

}  // namespace stsae
