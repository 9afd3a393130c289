#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "epifit/epispline.hpp"

namespace epifit {

enum class LossKind { ml_density, ls_density, ls_regression };

struct Sample {
  Eigen::MatrixXd covariates;              // n x d
  std::optional<Eigen::VectorXd> responses;  // present for regression

  int size() const { return static_cast<int>(covariates.rows()); }
};

// Filters rows outside the box; returns the kept sample and rejected count.
std::pair<Sample, int> ingest_sample(const Eigen::MatrixXd& covariates,
                                     const std::optional<Eigen::VectorXd>& responses,
                                     const BoxDomain& box, double tol = 1e-10);

// Per-simplex block Hessian (the losses only couple heights within one
// simplex). Acts on height vectors; also exposes its triplets for assembly.
struct BlockDiagHessian {
  int block_size = 0;
  std::vector<int> simplices;          // block -> simplex index
  std::vector<Eigen::MatrixXd> blocks;  // block_size x block_size each

  void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
  void append_triplets(std::vector<Eigen::Triplet<double>>& trips,
                       const std::vector<int>& col_of_height) const;
};

struct LossEval {
  bool finite = true;
  double value = 0.0;
  Eigen::VectorXd grad;
  BlockDiagHessian hess;
  // For ml_density at a point with nonpositive density: the offending data
  // and a direction whose positive multiples restore positivity.
  std::vector<int> nonpositive_data;
  Eigen::VectorXd push_direction;
};

// Loss precompiled against a complex: every datum is located once, after
// which evaluation cost no longer depends on where the data live and the
// decision-variable count stays N(d+1) regardless of n.
class CompiledLoss {
 public:
  static CompiledLoss compile(LossKind kind, const Sample& sample,
                              std::shared_ptr<const SimplicialComplex> complex);

  LossKind kind() const { return kind_; }
  int num_data() const { return n_; }
  int num_heights() const { return n_heights_; }
  const SimplicialComplex& complex() const { return *complex_; }

  struct Row {
    int simplex = 0;
    std::array<double, 4> w{};  // d+1 barycentric weights
  };
  const std::vector<Row>& rows() const { return rows_; }

  // f(x_j) for every datum.
  void data_values(const Eigen::VectorXd& h, Eigen::VectorXd& out) const;

  LossEval value_grad_hess(const Eigen::VectorXd& h) const;

 private:
  LossKind kind_ = LossKind::ml_density;
  std::shared_ptr<const SimplicialComplex> complex_;
  int n_ = 0;
  int n_heights_ = 0;
  std::vector<Row> rows_;
  Eigen::VectorXd responses_;
  Eigen::SparseMatrix<double> Q_;  // integral(f^2) form for ls_density
  std::vector<int> touched_;       // simplices with data (ml / ls_regression)
  std::vector<std::vector<int>> data_of_simplex_;
};

}  // namespace epifit
