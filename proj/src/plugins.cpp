#include "epifit/plugins.hpp"

#include <algorithm>
#include <limits>

namespace epifit {

double hausdorff_distance(const std::vector<Eigen::VectorXd>& a,
                          const std::vector<Eigen::VectorXd>& b) {
  if (a.empty() || b.empty())
    return a.empty() && b.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  auto one_sided = [](const std::vector<Eigen::VectorXd>& from,
                      const std::vector<Eigen::VectorXd>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& q : to) nearest = std::min(nearest, (p - q).norm());
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

PluginReport plugin_report(const EpiSpline& f, double delta, double alpha,
                           const std::vector<Eigen::VectorXd>* reference,
                           double tol_argmax) {
  if (delta < 0.0) fail(Errc::invalid_argument, "delta must be >= 0");
  PluginReport rep;
  rep.delta = delta;
  rep.alpha = alpha;
  const Eigen::VectorXd vals = f.vertex_values();
  rep.sup_height = vals.maxCoeff();
  const auto& cx = f.complex();
  for (int v = 0; v < cx.num_vertices(); ++v) {
    if (vals[v] >= rep.sup_height - tol_argmax) rep.modes.push_back(cx.vertex(v));
    if (vals[v] >= rep.sup_height - std::max(delta, tol_argmax))
      rep.near_modes.push_back(cx.vertex(v));
    if (vals[v] >= alpha) rep.superlevel.push_back(cx.vertex(v));
  }
  if (reference) rep.hausdorff_to = hausdorff_distance(rep.modes, *reference);
  return rep;
}

}  // namespace epifit
