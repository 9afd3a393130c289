#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "epifit/constraints.hpp"
#include "epifit/losses.hpp"

namespace epifit {

struct SolverConfig {
  double tol_gap = 1e-7;        // certified duality-gap target
  int max_iters = 200;          // total Newton steps
  double barrier_init = 1.0;    // initial barrier weight t
  double barrier_scale = 10.0;  // outer multiplication factor
  double ls_backtrack = 0.5;
  double ls_sufficient = 0.01;
  double epsilon_argmin = 0.0;  // absolute objective-gap tolerance of the problem
};

enum class SolveStatus { optimal, epsilon_optimal, max_iters, infeasible };

std::string to_string(SolveStatus s);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::optimal;
  double objective = 0.0;
  KktResiduals kkt;
  int iterations = 0;
  double wall_time = 0.0;
  double phase1_margin = 0.0;
  int n_reduced = 0;
  std::vector<double> outer_objectives;  // objective after each barrier stage
  std::string message;
};

struct Phase1Result {
  bool feasible = false;
  Eigen::VectorXd point;  // height vector when feasible
  double margin = 0.0;    // min slack across reduced rows and cone margins
  std::string certificate;
};

// Minimize loss(h) + lambda*|gradients|_1 over the compiled feasible set.
// Barrier interior-point with Newton steps on the (regularized, iteratively
// refined) KKT system; equality rows that alias two heights and variable
// groups forced equal by argmax rows are eliminated in presolve, so those
// equalities hold exactly in the returned vector. Returns the expanded
// height vector and a report; the penalty block may be null.
std::pair<Eigen::VectorXd, SolveReport> solve(const CompiledLoss& loss,
                                              const PenaltyBlock* penalty,
                                              const StandardForm& form,
                                              const Eigen::VectorXd* warm,
                                              const SolverConfig& cfg);

// Strictly feasible point for the form alone (no loss), or an infeasibility
// certificate from the relaxation minimum.
Phase1Result phase1(const StandardForm& form);

namespace detail {
// Analytic-center-flavored start of the combined problem; used to compare
// cold starts against prolongation warm starts.
Eigen::VectorXd cold_start_heights(const CompiledLoss& loss, const PenaltyBlock* penalty,
                                   const StandardForm& form);
}  // namespace detail

}  // namespace epifit
