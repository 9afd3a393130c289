#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "epifit/epispline.hpp"

namespace epifit {

enum class GradNorm { euclidean, max, one };

namespace spec {

struct Nonnegativity {};
struct IntegralEquals {
  double target = 1.0;
};
struct IntegralBand {
  double target = 1.0;
  double delta = 0.0;
};
struct ArgmaxCovers {
  std::vector<Eigen::VectorXd> points;
};
struct LevelSetCovers {
  std::vector<Eigen::VectorXd> points;
  double alpha = 0.0;
};
struct PointwiseBounds {
  // Scalar bound, or one value per unique complex vertex; absent = free side.
  std::optional<double> lower, upper;
  Eigen::VectorXd lower_per_vertex, upper_per_vertex;
};
struct Continuity {};
struct LipschitzBound {
  double kappa = 0.0;
  GradNorm norm = GradNorm::euclidean;
};
struct Monotone {
  std::vector<int> direction;  // per coordinate: -1, 0, +1
};
struct Concavity {};
struct MomentBox {
  Eigen::VectorXd lower, upper;
};

}  // namespace spec

using ConstraintSpec =
    std::variant<spec::Nonnegativity, spec::IntegralEquals, spec::IntegralBand,
                 spec::ArgmaxCovers, spec::LevelSetCovers, spec::PointwiseBounds,
                 spec::Continuity, spec::LipschitzBound, spec::Monotone,
                 spec::Concavity, spec::MomentBox>;

std::string constraint_name(const ConstraintSpec& s);

// Compiled convex feasible set over the height vector:
//   A h = b,  G h <= u,  ||M_j h||_2 <= bound_j.
// Every row is traceable to the spec that produced it.
struct StandardForm {
  int n_vars = 0;  // N(d+1) heights
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd u;
  struct SocBlock {
    Eigen::SparseMatrix<double> M;
    double bound = 0.0;
    int spec_index = -1;
  };
  std::vector<SocBlock> socs;
  std::vector<int> eq_spec;    // equality row -> spec index
  std::vector<int> ineq_spec;  // inequality row -> spec index

  // Equality rows of the exact form h_a = h_b (continuity and kappa=0
  // Lipschitz rows); presolve may alias these variables.
  std::vector<std::pair<int, int>> alias_pairs;

  // Variable groups forced equal by argmax rows: the covered point's value is
  // a convex combination of these heights and must dominate each of them, so
  // every feasible point is flat across the group. Presolve aliases them,
  // which restores a strict interior for the remaining rows.
  std::vector<std::vector<int>> forced_equal_groups;

  std::vector<std::string> var_map;  // provenance of auxiliary variables (none here)
};

StandardForm assemble(const std::vector<ConstraintSpec>& specs,
                      const SimplicialComplex& complex);

// Epigraph variables t_{k,j} >= |gradient_j of piece k| with objective
// lambda * sum t. Columns are [heights | aux].
struct PenaltyBlock {
  double lambda = 0.0;
  int n_aux = 0;
  Eigen::SparseMatrix<double> rows;  // (2 n_aux) x (n_heights + n_aux), rows <= 0
  Eigen::VectorXd aux_objective;     // length n_aux
  std::vector<std::string> var_map;

  double value(const EpiSpline& f) const;  // lambda * sum_k |grad_k|_1
};

PenaltyBlock assemble_penalty(double lambda, const SimplicialComplex& complex);

// Semantic feasibility of a height vector against the original specs
// (evaluated through the epi-spline calculus, not the compiled rows).
struct SemanticReport {
  bool ok = true;
  std::vector<std::string> failures;
};

struct SemanticTolerances {
  double integral = 1e-8;
  double argmax = 1e-9;  // tol_argmax
  double gradient = 1e-8;
  double pointwise = 1e-8;
  int concavity_pairs = 1000;
  std::uint64_t seed = 2024;
};

SemanticReport check_semantic(const std::vector<ConstraintSpec>& specs,
                              const EpiSpline& f,
                              const SemanticTolerances& tol = {});

}  // namespace epifit
