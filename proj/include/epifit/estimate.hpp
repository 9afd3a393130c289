#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epifit/constraints.hpp"
#include "epifit/hypodist.hpp"
#include "epifit/losses.hpp"
#include "epifit/solver.hpp"

namespace epifit {

// One pass over a refining schedule of partitions: build, compile, assemble,
// warm-start from the previous level, solve to the level tolerance, and stop
// either at the end of the schedule or when both the objective and the
// hypo-distance between successive estimates stagnate.
struct EstimationConfig {
  BoxDomain box;
  LossKind loss = LossKind::ml_density;
  double lambda = 0.0;
  std::vector<ConstraintSpec> constraints;
  std::vector<std::vector<int>> schedule;   // cells_per_dim per level
  double epsilon = 1e-3;
  std::vector<double> epsilon_schedule;     // optional; default eps*(1+2^{1-v})
  double stop_objective_tol = 0.0;          // 0 disables the stop rule
  double stop_dl_tol = 0.0;
  SolverConfig solver;
  HypoDistanceConfig hypo;
  std::uint64_t seed = 0;

  void validate() const;
  double level_epsilon(int level) const;
};

struct LevelReport {
  std::vector<int> cells;
  double objective = 0.0;
  SolveReport solve;
  double dl_to_previous = 0.0;  // 0 at the first level
  bool feasible_semantic = false;
  std::vector<std::string> semantic_failures;
  double warm_initial_objective = 0.0;
  double cold_initial_objective = 0.0;
  double epsilon = 0.0;
};

struct EstimateResult {
  EpiSpline estimate;
  std::vector<LevelReport> levels;
  std::string termination;
};

EstimateResult run(const EstimationConfig& cfg, const Sample& sample);

}  // namespace epifit
