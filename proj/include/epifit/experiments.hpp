#pragma once

#include <cstdint>
#include <vector>

#include "epifit/estimate.hpp"

namespace epifit {

struct AxisBox {
  Eigen::VectorXd lower, upper;
  double volume() const;
  bool contains_closed(const Eigen::VectorXd& x) const;
};

struct MixtureComponent {
  double weight = 0.0;
  std::vector<AxisBox> boxes;  // disjoint union
  double region_volume() const;
};

// Mixture of uniform densities on axis-aligned regions of the box. Evaluation
// uses closed regions, so the density is upper semicontinuous and equals the
// max of one-sided limits on region boundaries.
struct MixtureOfUniforms {
  BoxDomain box;
  std::vector<MixtureComponent> components;

  double density(const Eigen::VectorXd& x) const;
  void validate() const;

  // Two uniform bumps of equal area on the unit square over a uniform
  // background, calibrated so the background level is 0.6150 and the bump
  // level is 3.
  static MixtureOfUniforms two_bump_default();
};

Sample sample_mixture(const MixtureOfUniforms& mix, int n, std::uint64_t seed);

// (estimate, standard error) of the divergence of f from the mixture by
// sampling Z ~ mixture; +inf when f is nonpositive at any draw.
std::pair<double, double> kl_monte_carlo(const MixtureOfUniforms& f0,
                                         const EpiSpline& f, int m,
                                         std::uint64_t seed);

// usc interpolation of the mixture density on a partition.
EpiSpline truth_projection(const MixtureOfUniforms& mix,
                           std::shared_ptr<const SimplicialComplex> complex);

struct StudyRow {
  int n = 0;
  std::uint64_t seed = 0;
  int N = 0;
  double lambda = 0.0;
  double kl = 0.0;
  double kl_se = 0.0;
  double dl_truth = 0.0;
  double wall_time = 0.0;
  bool feasible = false;
  int n_variables = 0;  // decision variables incl. penalty auxiliaries
};

struct StudyResult {
  std::vector<StudyRow> rows;
};

struct ConsistencyStudyConfig {
  MixtureOfUniforms mixture;
  EstimationConfig estimation;      // schedule fixes N
  std::vector<int> n_values;
  std::vector<std::uint64_t> seeds;
  int kl_samples = 200000;
  int dl_ball_samples = 512;
  int dl_rho_nodes = 32;
  int threads = 1;
};

StudyResult consistency_study(const ConsistencyStudyConfig& cfg);

// median of the given field per n (rows pooled over seeds)
double median_over_seeds(const StudyResult& r, int n, double StudyRow::*field);

struct ScalingStudyConfig {
  MixtureOfUniforms mixture;
  EstimationConfig estimation;                 // schedule is replaced per N
  std::vector<int> N_values = {200, 800};      // 2 triangles per cell
  std::vector<int> n_values = {100, 1000, 10000};
  std::uint64_t seed = 1;
};

StudyResult scaling_study(const ScalingStudyConfig& cfg);

}  // namespace epifit
