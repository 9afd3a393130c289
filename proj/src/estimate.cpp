#include "epifit/estimate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace epifit {

void EstimationConfig::validate() const {
  box.validate();
  if (schedule.empty()) fail(Errc::invalid_argument, "empty refinement schedule");
  for (const auto& cells : schedule) {
    if (static_cast<int>(cells.size()) != box.dim())
      fail(Errc::invalid_argument, "schedule entry dimension mismatch");
    for (int m : cells)
      if (m < 1) fail(Errc::invalid_argument, "schedule cells must be >= 1");
  }
  for (std::size_t v = 1; v < schedule.size(); ++v) {
    bool coarser_nowhere = true, finer_somewhere = false;
    for (int i = 0; i < box.dim(); ++i) {
      if (schedule[v][i] < schedule[v - 1][i]) coarser_nowhere = false;
      if (schedule[v][i] > schedule[v - 1][i]) finer_somewhere = true;
    }
    if (!coarser_nowhere || !finer_somewhere)
      fail(Errc::invalid_argument, "schedule must be strictly refining");
  }
  if (epsilon < 0.0) fail(Errc::invalid_argument, "epsilon must be >= 0");
  if (!epsilon_schedule.empty()) {
    if (epsilon_schedule.size() != schedule.size())
      fail(Errc::invalid_argument, "epsilon schedule length mismatch");
    for (std::size_t v = 1; v < epsilon_schedule.size(); ++v)
      if (epsilon_schedule[v] > epsilon_schedule[v - 1])
        fail(Errc::invalid_argument, "epsilon schedule must be nonincreasing");
  }
  if (lambda < 0.0) fail(Errc::invalid_argument, "lambda must be >= 0");
}

double EstimationConfig::level_epsilon(int level) const {
  if (!epsilon_schedule.empty()) return epsilon_schedule[level];
  return epsilon * (1.0 + std::pow(2.0, -static_cast<double>(level)));
}

namespace {

double objective_at(const CompiledLoss& loss, const PenaltyBlock& pen,
                    const EpiSpline& f) {
  const auto ev = loss.value_grad_hess(f.heights());
  return (ev.finite ? ev.value : std::numeric_limits<double>::infinity()) +
         pen.value(f);
}

}  // namespace

EstimateResult run(const EstimationConfig& cfg, const Sample& sample) {
  cfg.validate();
  const auto& specs = cfg.constraints;

  std::optional<EpiSpline> previous;
  std::vector<LevelReport> levels;
  std::string termination = "schedule_exhausted";

  for (std::size_t v = 0; v < cfg.schedule.size(); ++v) {
    auto complex = SimplicialComplex::kuhn(cfg.box, cfg.schedule[v]);
    const auto loss = CompiledLoss::compile(cfg.loss, sample, complex);

    LevelReport lr;
    lr.cells = cfg.schedule[v];
    lr.epsilon = cfg.level_epsilon(static_cast<int>(v));

    SolverConfig scfg = cfg.solver;
    scfg.epsilon_argmin = lr.epsilon;

    Eigen::VectorXd h;
    SolveReport srep;
    std::optional<Eigen::VectorXd> warm;
    try {
      const auto form = assemble(specs, *complex);
      const auto pen = assemble_penalty(cfg.lambda, *complex);

      if (previous) warm = previous->prolongate(complex).heights();

      // warm-start benefit bookkeeping
      {
        const Eigen::VectorXd cold = detail::cold_start_heights(loss, &pen, form);
        lr.cold_initial_objective = objective_at(loss, pen, EpiSpline(complex, cold));
        lr.warm_initial_objective =
            warm ? objective_at(loss, pen, EpiSpline(complex, *warm))
                 : lr.cold_initial_objective;
      }

      std::tie(h, srep) = solve(loss, &pen, form, warm ? &*warm : nullptr, scfg);
    } catch (const Error& e) {
      if (e.code() != Errc::infeasible) throw;
      std::ostringstream os;
      os << "infeasible at level " << v << ": " << e.what();
      fail(Errc::infeasible, os.str());
    }
    lr.solve = srep;
    if (srep.status == SolveStatus::infeasible) {
      std::ostringstream os;
      os << "infeasible at level " << v << ": " << srep.message;
      fail(Errc::infeasible, os.str());
    }

    EpiSpline est(complex, h);
    lr.objective = srep.objective;
    const auto sem = check_semantic(specs, est);
    lr.feasible_semantic = sem.ok;
    lr.semantic_failures = sem.failures;

    if (previous) {
      HypoDistanceConfig hcfg = cfg.hypo;
      if (hcfg.center.size() == 0)
        hcfg.center = HypoDistanceConfig::defaults_for(cfg.box).center;
      hcfg.seed = cfg.seed;
      lr.dl_to_previous = dl(*previous, est, hcfg).dl_value;
    }

    const bool stagnated =
        previous && cfg.stop_objective_tol > 0.0 && cfg.stop_dl_tol > 0.0 &&
        std::abs(levels.back().objective - lr.objective) <= cfg.stop_objective_tol &&
        lr.dl_to_previous <= cfg.stop_dl_tol;

    previous = std::move(est);
    levels.push_back(std::move(lr));

    if (stagnated) {
      std::ostringstream os;
      os << "stagnated_at_level_" << v;
      termination = os.str();
      break;
    }
  }

  return EstimateResult{std::move(*previous), std::move(levels), termination};
}

}  // namespace epifit
