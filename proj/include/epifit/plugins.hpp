#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "epifit/epispline.hpp"

namespace epifit {

// Plug-in statistics of a fitted estimate: modes and near-modes (vertex
// attainment is exact for affine pieces), the sup height, and a super-level
// vertex set.
struct PluginReport {
  double sup_height = 0.0;
  std::vector<Eigen::VectorXd> modes;
  std::vector<Eigen::VectorXd> near_modes;
  double delta = 0.0;
  std::vector<Eigen::VectorXd> superlevel;
  double alpha = 0.0;
  std::optional<double> hausdorff_to;
};

PluginReport plugin_report(const EpiSpline& f, double delta, double alpha,
                           const std::vector<Eigen::VectorXd>* reference = nullptr,
                           double tol_argmax = 1e-9);

double hausdorff_distance(const std::vector<Eigen::VectorXd>& a,
                          const std::vector<Eigen::VectorXd>& b);

}  // namespace epifit
