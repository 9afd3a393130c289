#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "epifit/error.hpp"

namespace epifit {

// Compact box domain [lower, upper] in R^d.
struct BoxDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const;
  Eigen::VectorXd centroid() const { return 0.5 * (lower + upper); }
  bool contains(const Eigen::VectorXd& x, double tol) const;
  void validate() const;
};

// Containing simplex plus convex weights reconstructing the query point.
struct Location {
  int simplex = -1;
  Eigen::VectorXd barycentric;  // d+1 entries, nonnegative, summing to 1
};

// Simplicial partition of a box built by the Kuhn/Freudenthal rule: the grid
// of axis-aligned cells is split into d! simplices per cell, one for each
// vertex-insertion order. Immutable after construction.
class SimplicialComplex {
 public:
  static constexpr std::int64_t kDefaultSimplexCap = 4'000'000;

  static std::shared_ptr<const SimplicialComplex> kuhn(
      const BoxDomain& box, const std::vector<int>& cells_per_dim,
      std::int64_t simplex_cap = kDefaultSimplexCap);

  int dim() const { return dim_; }
  int num_vertices() const { return static_cast<int>(vertices_.rows()); }
  int num_simplices() const { return static_cast<int>(simplices_.rows()); }
  const BoxDomain& box() const { return box_; }
  const std::vector<int>& cells_per_dim() const { return cells_; }

  Eigen::VectorXd vertex(int v) const { return vertices_.row(v).transpose(); }
  const Eigen::MatrixXd& vertices() const { return vertices_; }
  const Eigen::MatrixXi& simplices() const { return simplices_; }

  // Global vertex index of local vertex i of simplex k.
  int simplex_vertex(int k, int i) const { return simplices_(k, i); }
  Eigen::VectorXd simplex_vertex_coords(int k, int i) const {
    return vertices_.row(simplices_(k, i)).transpose();
  }

  double volume(int k) const { return volumes_[k]; }
  const Eigen::VectorXd& volumes() const { return volumes_; }

  // Neighbor across the facet opposite local vertex i, or -1 on the boundary.
  int neighbor(int k, int i) const { return adjacency_(k, i); }

  // Linear map from the d+1 vertex heights of simplex k to the gradient of
  // its affine piece (d x (d+1)).
  const Eigen::MatrixXd& gradient_map(int k) const { return gradient_maps_[k]; }

  // Containing simplex with facet ties broken to the lowest simplex index;
  // points within 1e-10 of a facet count as on it.
  Location locate(const Eigen::VectorXd& x) const;

  // All (simplex, barycentric) pairs containing x within facet tolerance;
  // used for the usc boundary convention.
  std::vector<Location> locate_all(const Eigen::VectorXd& x) const;

  // Incidences (simplex k, local i) of the unique vertex v.
  const std::vector<std::pair<int, int>>& vertex_incidence(int v) const {
    return incidence_[v];
  }

  bool same_grid(const SimplicialComplex& other) const;

 private:
  SimplicialComplex() = default;

  int dim_ = 0;
  BoxDomain box_;
  std::vector<int> cells_;
  Eigen::VectorXd cell_width_;
  Eigen::MatrixXd vertices_;   // n_vertices x d
  Eigen::MatrixXi simplices_;  // n_simplices x (d+1)
  Eigen::VectorXd volumes_;
  Eigen::MatrixXi adjacency_;  // n_simplices x (d+1), -1 marks the boundary
  std::vector<std::vector<int>> perms_;  // lexicographic permutations of 0..d-1
  std::vector<Eigen::MatrixXd> gradient_maps_;
  std::vector<std::vector<std::pair<int, int>>> incidence_;

  std::int64_t cell_linear(const std::vector<int>& c) const;
  std::int64_t vertex_linear(const std::vector<int>& c) const;
};

// |det [c1-c0, ..., cd-c0]| / d! for d+1 points given as rows.
double simplex_volume(const Eigen::MatrixXd& vertex_coords);

}  // namespace epifit
