#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "epifit/epispline.hpp"

namespace epifit {

enum class BallNorm { euclidean, max };

// Localization of the hypograph distance at a center point in R^{d+1}.
// ball_samples is the budget of low-discrepancy points laid out in the
// rho_max ball; the rho-ball uses its nested subset (radii are uniform in
// [0, rho_max] so every prefix ball gets a proportional share, and the center
// itself is always sample 0).
struct HypoDistanceConfig {
  Eigen::VectorXd center;             // (d+1)-vector; empty = (box centroid, 0)
  BallNorm norm = BallNorm::euclidean;
  double rho_max = 8.0;
  int rho_nodes = 64;
  int ball_samples = 4096;
  std::uint64_t seed = 0;

  void validate(int space_dim) const;
  static HypoDistanceConfig defaults_for(const BoxDomain& box);
};

struct DistanceReport {
  double dl_value = 0.0;
  std::vector<std::pair<double, double>> dl_rho_curve;  // (rho, dl_rho)
  double truncation_bound = 0.0;
  double resolution_estimate = 0.0;  // covering-radius heuristic of the sample set
};

// Distance (euclidean) from p in R^{d+1} to the hypograph of f, computed as
// the min over simplices of the projection onto {(y,b): y in cl R_k,
// b <= g_k.y + b_k}; each projection enumerates the facial lattice of the
// simplex (d <= 3).
double dist_point_to_hypo(const Eigen::VectorXd& p, const EpiSpline& f);

double dl_rho(const EpiSpline& f, const EpiSpline& g, double rho,
              const HypoDistanceConfig& cfg);

DistanceReport dl(const EpiSpline& f, const EpiSpline& g,
                  const HypoDistanceConfig& cfg);

namespace detail {

// Cached per-simplex data for repeated distance queries against one spline.
class HypographDistance {
 public:
  explicit HypographDistance(const EpiSpline& f);
  double dist(const Eigen::VectorXd& p) const;

 private:
  const EpiSpline& f_;
  int d_;
  std::vector<Eigen::MatrixXd> verts_;      // d x (d+1) per simplex
  std::vector<Eigen::VectorXd> grads_;
  std::vector<double> offsets_;
  std::vector<double> max_height_;
  std::vector<std::vector<double>> centers_soa_;
  std::vector<double> radii_;
};

// Deterministic low-discrepancy sample of the rho_max ball around the center;
// point 0 is the center itself. Returns points and their radii in cfg.norm.
struct BallSamples {
  Eigen::MatrixXd points;  // n x (d+1)
  Eigen::VectorXd radii;
};
BallSamples ball_samples(const HypoDistanceConfig& cfg, int space_dim);

double inverse_normal_cdf(double p);
double halton(std::uint64_t index, std::uint64_t base);

}  // namespace detail

}  // namespace epifit
