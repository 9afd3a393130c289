#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "epifit/geometry.hpp"

namespace epifit {

// First-order epi-spline: one affine piece per simplex, stored as the d+1
// vertex heights of each simplex (heights may disagree across shared
// vertices, so discontinuous splines are representable). On shared facets
// the value is the maximum over incident pieces, which keeps the hypograph
// closed.
class EpiSpline {
 public:
  EpiSpline(std::shared_ptr<const SimplicialComplex> complex, Eigen::VectorXd heights);

  static EpiSpline constant(std::shared_ptr<const SimplicialComplex> complex,
                            double value);

  const SimplicialComplex& complex() const { return *complex_; }
  std::shared_ptr<const SimplicialComplex> complex_ptr() const { return complex_; }
  const Eigen::VectorXd& heights() const { return heights_; }
  double height(int k, int i) const { return heights_[k * (complex_->dim() + 1) + i]; }
  int num_parameters() const { return static_cast<int>(heights_.size()); }

  double evaluate(const Eigen::VectorXd& x) const;

  // Values at many points (lowest-index piece, no usc max); used by sampling
  // oracles where facet points have measure zero. Points must be inside the
  // box. xs is points-by-dim.
  void evaluate_batch(const Eigen::MatrixXd& xs, Eigen::VectorXd& out) const;

  Eigen::VectorXd piece_gradient(int k) const;
  double piece_offset(int k) const;  // b with piece(x) = g.x + b

  double integral() const;
  Eigen::VectorXd first_moment() const;

  std::pair<double, std::vector<Eigen::VectorXd>> sup_and_argmax(
      double tol_argmax = 1e-9) const;
  std::vector<Eigen::VectorXd> superlevel_points(double alpha) const;

  // Heights of a spline on the finer complex interpolating this one.
  EpiSpline prolongate(std::shared_ptr<const SimplicialComplex> finer) const;

  // usc value of every unique vertex (max over incident pieces).
  Eigen::VectorXd vertex_values() const;

 private:
  std::shared_ptr<const SimplicialComplex> complex_;
  Eigen::VectorXd heights_;
};

// Exact integral of f*g on the shared complex via the simplex product-moment
// identity; symmetric positive semidefinite in the height vectors.
double quadratic_form(const EpiSpline& f, const EpiSpline& g);

// The quadratic-form matrix Q with integral(f*g) = f_heights' Q g_heights.
Eigen::SparseMatrix<double> quadratic_form_matrix(const SimplicialComplex& complex);

// Linear functional coefficients: integral(f) = a . heights.
Eigen::VectorXd integral_coefficients(const SimplicialComplex& complex);

// Row m holds the coefficients of moment coordinate m in the heights.
Eigen::MatrixXd moment_coefficients(const SimplicialComplex& complex);

struct GridEvaluation {
  Eigen::MatrixXd points;  // n x d
  Eigen::VectorXd values;
};

GridEvaluation eval_grid(const EpiSpline& f, const std::vector<int>& resolution);

}  // namespace epifit
