#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "epifit/io.hpp"
#include "support/oracles.hpp"

using namespace epifit;

namespace {

BoxDomain unit_box(int d) {
  BoxDomain box;
  box.lower = Eigen::VectorXd::Zero(d);
  box.upper = Eigen::VectorXd::Ones(d);
  return box;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("format_double round-trips and is canonical") {
  for (double v : {0.1, 1.0, -3.25, 1e-17, 123456.789, 0.6150}) {
    const std::string s = io::format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(io::format_double(1.0) == "1");
  CHECK_THROWS_AS(io::format_double(std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("model json round-trip preserves heights bitwise") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 2});
  const EpiSpline f = oracles::random_spline(cx, 3);
  const std::string text = io::model_to_json(f);
  const EpiSpline g = io::model_from_json(text);
  CHECK((f.heights() - g.heights()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.complex().num_simplices() == cx->num_simplices());
  // serialization is deterministic
  CHECK(io::model_to_json(g) == text);
}

TEST_CASE("model json accepts an estimate result wrapper") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {2});
  const EpiSpline f = EpiSpline::constant(cx, 1.0);
  EstimateResult res{f, {}, "schedule_exhausted"};
  const std::string text = io::estimate_result_to_json(res);
  const EpiSpline g = io::model_from_json(text);
  CHECK((f.heights() - g.heights()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("problem config parsing with strict keys") {
  const std::string good = R"({
    "box": {"lower": [0, 0], "upper": [1, 1]},
    "loss": {"kind": "ml_density"},
    "penalty": {"lambda": 0.05},
    "constraints": [
      {"type": "pointwise_bounds", "lower": 0.0001, "upper": 10000},
      {"type": "integral_equals", "target": 1},
      {"type": "lipschitz_bound", "kappa": 100, "norm": "euclidean"},
      {"type": "argmax_covers", "points": [[0.4702, 0.4657], [0.7746, 0.7773]]}
    ],
    "schedule": [[5, 5], [10, 10]],
    "epsilon": 0.001,
    "seed": 7
  })";
  const EstimationConfig cfg = io::problem_config_from_json(good);
  CHECK(cfg.loss == LossKind::ml_density);
  CHECK(cfg.lambda == 0.05);
  CHECK(cfg.constraints.size() == 4);
  CHECK(cfg.schedule.size() == 2);
  CHECK(cfg.seed == 7);

  try {
    io::problem_config_from_json(R"({"box": {"lower": [0], "upper": [1]},
      "loss": {"kind": "ml_density"}, "schedule": [[4]], "bogus_key": 1})");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::schema_error);
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(io::problem_config_from_json("{not json"), Error);
}

TEST_CASE("sample csv loading with header and rejected rows") {
  const std::string path = temp_path("epifit_test_sample.csv");
  {
    std::ofstream out(path);
    out << "x1,x2\n0.5,0.5\n1.5,0.5\n0.25,0.75\n";
  }
  const auto loaded = io::load_sample_csv(path, unit_box(2), false);
  CHECK(loaded.sample.size() == 2);
  CHECK(loaded.rejected == 1);
  std::filesystem::remove(path);
}

TEST_CASE("sample csv with responses") {
  const std::string path = temp_path("epifit_test_regression.csv");
  {
    std::ofstream out(path);
    out << "0.5,1.25\n0.1,0.5\n";
  }
  const auto loaded = io::load_sample_csv(path, unit_box(1), true);
  REQUIRE(loaded.sample.responses.has_value());
  CHECK((*loaded.sample.responses)[0] == 1.25);
  std::filesystem::remove(path);
}

TEST_CASE("grid csv has the documented header") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {2, 2});
  const auto grid = eval_grid(EpiSpline::constant(cx, 1.0), {3, 3});
  const std::string csv = io::grid_to_csv(grid);
  CHECK(csv.rfind("x1,x2,value\n", 0) == 0);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 9);
}

TEST_CASE("study config parsing") {
  const std::string text = R"({
    "study": "consistency",
    "estimation": {
      "box": {"lower": [0, 0], "upper": [1, 1]},
      "loss": {"kind": "ml_density"},
      "constraints": [{"type": "continuity"}, {"type": "nonnegativity"},
                      {"type": "integral_equals", "target": 1}],
      "schedule": [[4, 4]]
    },
    "n_values": [50, 100],
    "seeds": [1, 2],
    "kl_samples": 5000
  })";
  const io::StudyConfig sc = io::study_config_from_json(text);
  CHECK(sc.kind == "consistency");
  CHECK(sc.consistency.n_values.size() == 2);
  CHECK(sc.consistency.seeds.size() == 2);
  CHECK(sc.consistency.kl_samples == 5000);
  // the default mixture ships when none is given
  CHECK(sc.consistency.mixture.components.size() == 3);
}

TEST_CASE("distance report and plugin report serialization") {
  DistanceReport rep;
  rep.dl_value = 0.25;
  rep.dl_rho_curve = {{0.0, 0.0}, {1.0, 0.5}};
  rep.truncation_bound = 1e-3;
  rep.resolution_estimate = 0.01;
  const std::string s = io::distance_report_to_json(rep);
  CHECK(s.find("\"dl_value\":0.25") != std::string::npos);
  CHECK(s.find("dl_rho_curve") != std::string::npos);

  PluginReport pr;
  pr.sup_height = 2.0;
  pr.modes.push_back(Eigen::Vector2d(0.5, 0.5));
  pr.near_modes.push_back(Eigen::Vector2d(0.5, 0.5));
  const std::string ps = io::plugin_report_to_json(pr);
  CHECK(ps.find("\"sup_height\":2") != std::string::npos);
  CHECK(ps.find("[0.5,0.5]") != std::string::npos);
}
