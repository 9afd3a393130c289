#include "epifit/cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "epifit/io.hpp"

namespace epifit {

namespace {

std::vector<int> parse_resolution(const std::string& text) {
  std::vector<int> res;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      res.push_back(std::stoi(tok));
    } catch (...) {
      fail(Errc::schema_error, "resolution must be comma-separated integers");
    }
  }
  if (res.empty()) fail(Errc::schema_error, "empty resolution");
  return res;
}

int cmd_estimate(const std::string& config_path, const std::string& sample_path,
                 const std::string& out_path, std::optional<std::uint64_t> seed) {
  EstimationConfig cfg = io::problem_config_from_json(io::read_file(config_path));
  if (seed) cfg.seed = *seed;
  const auto loaded = io::load_sample_csv(sample_path, cfg.box,
                                          cfg.loss == LossKind::ls_regression);
  if (loaded.rejected > 0)
    std::cerr << "note: rejected " << loaded.rejected << " out-of-box sample rows\n";
  const EstimateResult res = run(cfg, loaded.sample);
  for (const auto& lr : res.levels) {
    if (lr.solve.status == SolveStatus::max_iters)
      fail(Errc::solver_failure, "solver hit the iteration budget: " + lr.solve.message);
  }
  io::write_file(out_path, io::estimate_result_to_json(res));
  double wall = 0.0;
  for (const auto& lr : res.levels) wall += lr.solve.wall_time;
  std::cerr << "estimate: " << res.levels.size() << " level(s), objective "
            << res.levels.back().objective << ", " << wall << "s, " << res.termination
            << "\n";
  return 0;
}

int cmd_distance(const std::string& model_a, const std::string& model_b,
                 const std::string& config_path, const std::string& out_path) {
  const EpiSpline a = io::model_from_json(io::read_file(model_a));
  const EpiSpline b = io::model_from_json(io::read_file(model_b));
  HypoDistanceConfig cfg = HypoDistanceConfig::defaults_for(a.complex().box());
  if (!config_path.empty())
    cfg = io::hypodist_config_from_json(io::read_file(config_path),
                                        a.complex().dim() + 1);
  if (cfg.center.size() == 0)
    cfg.center = HypoDistanceConfig::defaults_for(a.complex().box()).center;
  const DistanceReport rep = dl(a, b, cfg);
  io::write_file(out_path, io::distance_report_to_json(rep));
  std::cerr << "dl = " << rep.dl_value << " (truncation bound " << rep.truncation_bound
            << ")\n";
  return 0;
}

int cmd_report(const std::string& model_path, double delta, double alpha,
               const std::string& out_path) {
  const EpiSpline f = io::model_from_json(io::read_file(model_path));
  const PluginReport rep = plugin_report(f, delta, alpha);
  io::write_file(out_path, io::plugin_report_to_json(rep));
  std::cerr << "sup " << rep.sup_height << ", " << rep.modes.size() << " mode(s)\n";
  return 0;
}

int cmd_eval_grid(const std::string& model_path, const std::string& resolution,
                  const std::string& out_path) {
  const EpiSpline f = io::model_from_json(io::read_file(model_path));
  const GridEvaluation grid = eval_grid(f, parse_resolution(resolution));
  io::write_file(out_path, io::grid_to_csv(grid));
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path,
                   std::optional<int> threads) {
  io::StudyConfig sc = io::study_config_from_json(io::read_file(config_path));
  StudyResult result;
  if (sc.kind == "consistency") {
    if (threads) sc.consistency.threads = *threads;
    result = consistency_study(sc.consistency);
  } else {
    result = scaling_study(sc.scaling);
  }
  io::write_file(out_path, io::study_to_csv(result));
  std::cerr << "experiment: " << result.rows.size() << " row(s)\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Constrained M-estimation over piecewise-affine splines"};
  app.require_subcommand(1);

  std::string config, sample, out, model, model_b, resolution = "50";
  double delta = 0.0, alpha = 0.0;
  std::uint64_t seed_value = 0;
  bool seed_set = false;
  int threads_value = 1;
  bool threads_set = false;

  auto* est = app.add_subcommand("estimate", "Fit a constrained estimate");
  est->add_option("--config", config, "problem config JSON")->required();
  est->add_option("--sample", sample, "sample CSV")->required();
  est->add_option("--out", out, "output JSON path")->required();
  est->add_option("--seed", seed_value, "seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  est->add_option("--threads", threads_value, "worker threads")->each([&](const std::string&) {
    threads_set = true;
  });

  auto* dist = app.add_subcommand("distance", "Hypo-distance between two models");
  dist->add_option("--model-a", model, "first model JSON")->required();
  dist->add_option("--model-b", model_b, "second model JSON")->required();
  dist->add_option("--config", config, "hypo-distance config JSON");
  dist->add_option("--out", out, "output JSON path")->required();

  auto* repc = app.add_subcommand("report", "Plug-in mode/level-set report");
  repc->add_option("--model", model, "model JSON")->required();
  repc->add_option("--delta", delta, "near-mode tolerance");
  repc->add_option("--alpha", alpha, "super-level threshold");
  repc->add_option("--out", out, "output JSON path")->required();

  auto* grid = app.add_subcommand("eval-grid", "Evaluate a model on a regular grid");
  grid->add_option("--model", model, "model JSON")->required();
  grid->add_option("--resolution", resolution, "points per dimension, comma separated")
      ->required();
  grid->add_option("--out", out, "output CSV path")->required();

  auto* expc = app.add_subcommand("experiment", "Run a study config");
  expc->add_option("--config", config, "study config JSON")->required();
  expc->add_option("--out", out, "output CSV path")->required();
  expc->add_option("--threads", threads_value, "worker threads")->each([&](const std::string&) {
    threads_set = true;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (est->parsed())
      return cmd_estimate(config, sample, out,
                          seed_set ? std::optional<std::uint64_t>(seed_value)
                                   : std::nullopt);
    if (dist->parsed()) return cmd_distance(model, model_b, config, out);
    if (repc->parsed()) return cmd_report(model, delta, alpha, out);
    if (grid->parsed()) return cmd_eval_grid(model, resolution, out);
    if (expc->parsed())
      return cmd_experiment(config, out,
                            threads_set ? std::optional<int>(threads_value)
                                        : std::nullopt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case Errc::infeasible: return 2;
      case Errc::solver_failure: return 3;
      default: return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace epifit
