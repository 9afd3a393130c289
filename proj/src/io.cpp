#include "epifit/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace epifit::io {

using njson = nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) fail(Errc::io_error, "refusing to serialize a non-finite value");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write file: " + path);
  out << content;
  if (!out) fail(Errc::io_error, "write failed: " + path);
}

namespace {

std::string vec_json(const Eigen::VectorXd& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_double(v[i]);
  }
  return s + "]";
}

std::string ivec_json(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + "]";
}

std::string points_json(const std::vector<Eigen::VectorXd>& pts) {
  std::string s = "[";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ",";
    s += vec_json(pts[i]);
  }
  return s + "]";
}

// strict-schema helpers -----------------------------------------------------

void check_keys(const njson& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(Errc::schema_error, ctx + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok) fail(Errc::schema_error, "unknown key '" + it.key() + "' in " + ctx);
  }
}

double get_num(const njson& j, const std::string& ctx) {
  if (!j.is_number()) fail(Errc::schema_error, ctx + " must be a number");
  return j.get<double>();
}

Eigen::VectorXd get_vec(const njson& j, const std::string& ctx) {
  if (!j.is_array()) fail(Errc::schema_error, ctx + " must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = get_num(j[i], ctx);
  return v;
}

std::vector<int> get_ivec(const njson& j, const std::string& ctx) {
  if (!j.is_array()) fail(Errc::schema_error, ctx + " must be an array of integers");
  std::vector<int> v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer()) fail(Errc::schema_error, ctx + " must hold integers");
    v[i] = j[i].get<int>();
  }
  return v;
}

njson parse(const std::string& text) {
  njson j = njson::parse(text, nullptr, false);
  if (j.is_discarded()) fail(Errc::schema_error, "malformed JSON");
  return j;
}

BoxDomain box_from(const njson& j, const std::string& ctx) {
  check_keys(j, ctx, {"lower", "upper"});
  if (!j.contains("lower") || !j.contains("upper"))
    fail(Errc::schema_error, ctx + " needs 'lower' and 'upper'");
  BoxDomain box{get_vec(j["lower"], ctx + ".lower"), get_vec(j["upper"], ctx + ".upper")};
  box.validate();
  return box;
}

}  // namespace

std::string complex_to_json(const SimplicialComplex& cx, int) {
  std::string s = "{\"dim\":" + std::to_string(cx.dim());
  s += ",\"lower\":" + vec_json(cx.box().lower);
  s += ",\"upper\":" + vec_json(cx.box().upper);
  s += ",\"cells_per_dim\":" + ivec_json(cx.cells_per_dim());
  s += ",\"vertices\":[";
  for (int v = 0; v < cx.num_vertices(); ++v) {
    if (v) s += ",";
    s += vec_json(cx.vertex(v));
  }
  s += "],\"simplices\":[";
  for (int k = 0; k < cx.num_simplices(); ++k) {
    if (k) s += ",";
    s += "[";
    for (int i = 0; i <= cx.dim(); ++i) {
      if (i) s += ",";
      s += std::to_string(cx.simplex_vertex(k, i));
    }
    s += "]";
  }
  s += "]}";
  return s;
}

std::string model_to_json(const EpiSpline& f) {
  std::string s = "{\"complex\":" + complex_to_json(f.complex());
  s += ",\"heights\":" + vec_json(f.heights());
  s += "}\n";
  return s;
}

std::string distance_report_to_json(const DistanceReport& rep) {
  std::string s = "{\"dl_value\":" + format_double(rep.dl_value);
  s += ",\"dl_rho_curve\":[";
  for (std::size_t i = 0; i < rep.dl_rho_curve.size(); ++i) {
    if (i) s += ",";
    s += "[" + format_double(rep.dl_rho_curve[i].first) + "," +
         format_double(rep.dl_rho_curve[i].second) + "]";
  }
  s += "],\"truncation_bound\":" + format_double(rep.truncation_bound);
  s += ",\"resolution_estimate\":" + format_double(rep.resolution_estimate);
  s += "}\n";
  return s;
}

std::string plugin_report_to_json(const PluginReport& rep) {
  std::string s = "{\"sup_height\":" + format_double(rep.sup_height);
  s += ",\"delta\":" + format_double(rep.delta);
  s += ",\"alpha\":" + format_double(rep.alpha);
  s += ",\"modes\":" + points_json(rep.modes);
  s += ",\"near_modes\":" + points_json(rep.near_modes);
  s += ",\"superlevel\":" + points_json(rep.superlevel);
  if (rep.hausdorff_to) s += ",\"hausdorff_to\":" + format_double(*rep.hausdorff_to);
  s += "}\n";
  return s;
}

std::string estimate_result_to_json(const EstimateResult& res) {
  std::string s = "{\"model\":";
  s.reserve(1 << 16);
  s += "{\"complex\":" + complex_to_json(res.estimate.complex());
  s += ",\"heights\":" + vec_json(res.estimate.heights()) + "}";
  s += ",\"levels\":[";
  for (std::size_t v = 0; v < res.levels.size(); ++v) {
    const auto& lr = res.levels[v];
    if (v) s += ",";
    s += "{\"cells_per_dim\":" + ivec_json(lr.cells);
    s += ",\"objective\":" + format_double(lr.objective);
    s += ",\"epsilon\":" + format_double(lr.epsilon);
    s += ",\"status\":\"" + to_string(lr.solve.status) + "\"";
    s += ",\"iterations\":" + std::to_string(lr.solve.iterations);
    s += ",\"kkt\":{\"stationarity\":" + format_double(lr.solve.kkt.stationarity);
    s += ",\"primal\":" + format_double(lr.solve.kkt.primal);
    s += ",\"dual\":" + format_double(lr.solve.kkt.dual);
    s += ",\"gap\":" + format_double(lr.solve.kkt.gap) + "}";
    s += ",\"dl_to_previous\":" + format_double(lr.dl_to_previous);
    s += ",\"feasible\":" + std::string(lr.feasible_semantic ? "true" : "false");
    s += ",\"warm_initial_objective\":" + format_double(lr.warm_initial_objective);
    s += ",\"cold_initial_objective\":" + format_double(lr.cold_initial_objective);
    s += "}";
  }
  s += "],\"termination\":\"" + res.termination + "\"}\n";
  return s;
}

EpiSpline model_from_json(const std::string& text) {
  njson j = parse(text);
  if (j.is_object() && j.contains("model")) j = j["model"];  // estimate output wrapper
  check_keys(j, "model", {"complex", "heights"});
  if (!j.contains("complex") || !j.contains("heights"))
    fail(Errc::schema_error, "model needs 'complex' and 'heights'");
  const njson& jc = j["complex"];
  check_keys(jc, "model.complex",
             {"dim", "lower", "upper", "cells_per_dim", "vertices", "simplices"});
  BoxDomain box{get_vec(jc["lower"], "complex.lower"),
                get_vec(jc["upper"], "complex.upper")};
  const auto cells = get_ivec(jc["cells_per_dim"], "complex.cells_per_dim");
  auto cx = SimplicialComplex::kuhn(box, cells);
  if (jc.contains("dim") && jc["dim"].get<int>() != cx->dim())
    fail(Errc::schema_error, "model.complex.dim inconsistent with bounds");
  if (jc.contains("vertices") && static_cast<int>(jc["vertices"].size()) != cx->num_vertices())
    fail(Errc::schema_error, "model.complex.vertices inconsistent with cells_per_dim");
  if (jc.contains("simplices") && static_cast<int>(jc["simplices"].size()) != cx->num_simplices())
    fail(Errc::schema_error, "model.complex.simplices inconsistent with cells_per_dim");
  const Eigen::VectorXd h = get_vec(j["heights"], "model.heights");
  if (h.size() != static_cast<Eigen::Index>(cx->num_simplices()) * (cx->dim() + 1))
    fail(Errc::schema_error, "model.heights has the wrong length");
  return EpiSpline(cx, h);
}

namespace {

ConstraintSpec constraint_from(const njson& j, const BoxDomain& box) {
  if (!j.is_object() || !j.contains("type"))
    fail(Errc::schema_error, "constraint entries need a 'type'");
  const std::string type = j["type"].get<std::string>();
  auto pts_from = [&](const njson& arr) {
    std::vector<Eigen::VectorXd> pts;
    if (!arr.is_array()) fail(Errc::schema_error, "constraint points must be an array");
    for (const auto& p : arr) pts.push_back(get_vec(p, "constraint point"));
    return pts;
  };
  if (type == "nonnegativity") {
    check_keys(j, "constraint", {"type"});
    return spec::Nonnegativity{};
  }
  if (type == "integral_equals") {
    check_keys(j, "constraint", {"type", "target"});
    return spec::IntegralEquals{j.contains("target") ? get_num(j["target"], "target") : 1.0};
  }
  if (type == "integral_band") {
    check_keys(j, "constraint", {"type", "target", "delta"});
    return spec::IntegralBand{get_num(j.at("target"), "target"),
                              get_num(j.at("delta"), "delta")};
  }
  if (type == "argmax_covers") {
    check_keys(j, "constraint", {"type", "points"});
    return spec::ArgmaxCovers{pts_from(j.at("points"))};
  }
  if (type == "level_set_covers") {
    check_keys(j, "constraint", {"type", "points", "alpha"});
    return spec::LevelSetCovers{pts_from(j.at("points")), get_num(j.at("alpha"), "alpha")};
  }
  if (type == "pointwise_bounds") {
    check_keys(j, "constraint", {"type", "lower", "upper"});
    spec::PointwiseBounds pb;
    if (j.contains("lower")) {
      if (j["lower"].is_array()) pb.lower_per_vertex = get_vec(j["lower"], "lower");
      else pb.lower = get_num(j["lower"], "lower");
    }
    if (j.contains("upper")) {
      if (j["upper"].is_array()) pb.upper_per_vertex = get_vec(j["upper"], "upper");
      else pb.upper = get_num(j["upper"], "upper");
    }
    return pb;
  }
  if (type == "continuity") {
    check_keys(j, "constraint", {"type"});
    return spec::Continuity{};
  }
  if (type == "lipschitz_bound") {
    check_keys(j, "constraint", {"type", "kappa", "norm"});
    spec::LipschitzBound lb;
    lb.kappa = get_num(j.at("kappa"), "kappa");
    if (j.contains("norm")) {
      const std::string n = j["norm"].get<std::string>();
      if (n == "euclidean") lb.norm = GradNorm::euclidean;
      else if (n == "max") lb.norm = GradNorm::max;
      else if (n == "one") lb.norm = GradNorm::one;
      else fail(Errc::schema_error, "unknown gradient norm '" + n + "'");
    }
    return lb;
  }
  if (type == "monotone") {
    check_keys(j, "constraint", {"type", "direction"});
    return spec::Monotone{get_ivec(j.at("direction"), "direction")};
  }
  if (type == "concavity") {
    check_keys(j, "constraint", {"type"});
    return spec::Concavity{};
  }
  if (type == "moment_box") {
    check_keys(j, "constraint", {"type", "lower", "upper"});
    return spec::MomentBox{get_vec(j.at("lower"), "lower"), get_vec(j.at("upper"), "upper")};
  }
  (void)box;
  fail(Errc::schema_error, "unknown constraint type '" + type + "'");
}

HypoDistanceConfig hypodist_from(const njson& j, int space_dim) {
  check_keys(j, "hypodist",
             {"center", "norm", "rho_max", "rho_nodes", "ball_samples", "seed"});
  HypoDistanceConfig cfg;
  if (j.contains("center")) cfg.center = get_vec(j["center"], "hypodist.center");
  if (j.contains("norm")) {
    const std::string n = j["norm"].get<std::string>();
    if (n == "euclidean") cfg.norm = BallNorm::euclidean;
    else if (n == "max") cfg.norm = BallNorm::max;
    else fail(Errc::schema_error, "unknown ball norm '" + n + "'");
  }
  if (j.contains("rho_max")) cfg.rho_max = get_num(j["rho_max"], "rho_max");
  if (j.contains("rho_nodes")) cfg.rho_nodes = j["rho_nodes"].get<int>();
  if (j.contains("ball_samples")) cfg.ball_samples = j["ball_samples"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (space_dim > 0) cfg.validate(space_dim);
  return cfg;
}

EstimationConfig estimation_from(const njson& j) {
  check_keys(j, "config",
             {"box", "loss", "penalty", "constraints", "schedule", "epsilon",
              "epsilon_schedule", "stop", "solver", "hypodist", "seed"});
  EstimationConfig cfg;
  if (!j.contains("box")) fail(Errc::schema_error, "config needs 'box'");
  cfg.box = box_from(j["box"], "box");
  if (!j.contains("loss")) fail(Errc::schema_error, "config needs 'loss'");
  check_keys(j["loss"], "loss", {"kind"});
  const std::string kind = j["loss"].at("kind").get<std::string>();
  if (kind == "ml_density") cfg.loss = LossKind::ml_density;
  else if (kind == "ls_density") cfg.loss = LossKind::ls_density;
  else if (kind == "ls_regression") cfg.loss = LossKind::ls_regression;
  else fail(Errc::schema_error, "unknown loss kind '" + kind + "'");
  if (j.contains("penalty")) {
    check_keys(j["penalty"], "penalty", {"lambda"});
    cfg.lambda = get_num(j["penalty"].at("lambda"), "lambda");
  }
  if (j.contains("constraints")) {
    if (!j["constraints"].is_array())
      fail(Errc::schema_error, "'constraints' must be an array");
    for (const auto& c : j["constraints"])
      cfg.constraints.push_back(constraint_from(c, cfg.box));
  }
  if (!j.contains("schedule")) fail(Errc::schema_error, "config needs 'schedule'");
  for (const auto& lvl : j["schedule"]) cfg.schedule.push_back(get_ivec(lvl, "schedule"));
  if (j.contains("epsilon")) cfg.epsilon = get_num(j["epsilon"], "epsilon");
  if (j.contains("epsilon_schedule"))
    for (const auto& e : j["epsilon_schedule"])
      cfg.epsilon_schedule.push_back(get_num(e, "epsilon_schedule"));
  if (j.contains("stop")) {
    check_keys(j["stop"], "stop", {"objective_tol", "dl_tol"});
    if (j["stop"].contains("objective_tol"))
      cfg.stop_objective_tol = get_num(j["stop"]["objective_tol"], "objective_tol");
    if (j["stop"].contains("dl_tol"))
      cfg.stop_dl_tol = get_num(j["stop"]["dl_tol"], "dl_tol");
  }
  if (j.contains("solver")) {
    const njson& s = j["solver"];
    check_keys(s, "solver",
               {"tol_gap", "max_iters", "barrier_init", "barrier_scale", "ls_backtrack",
                "ls_sufficient"});
    if (s.contains("tol_gap")) cfg.solver.tol_gap = get_num(s["tol_gap"], "tol_gap");
    if (s.contains("max_iters")) cfg.solver.max_iters = s["max_iters"].get<int>();
    if (s.contains("barrier_init"))
      cfg.solver.barrier_init = get_num(s["barrier_init"], "barrier_init");
    if (s.contains("barrier_scale"))
      cfg.solver.barrier_scale = get_num(s["barrier_scale"], "barrier_scale");
    if (s.contains("ls_backtrack"))
      cfg.solver.ls_backtrack = get_num(s["ls_backtrack"], "ls_backtrack");
    if (s.contains("ls_sufficient"))
      cfg.solver.ls_sufficient = get_num(s["ls_sufficient"], "ls_sufficient");
  }
  if (j.contains("hypodist"))
    cfg.hypo = hypodist_from(j["hypodist"], cfg.box.dim() + 1);
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

MixtureOfUniforms mixture_from(const njson& j, const BoxDomain& box) {
  check_keys(j, "mixture", {"components"});
  MixtureOfUniforms mix;
  mix.box = box;
  if (!j.contains("components")) fail(Errc::schema_error, "mixture needs 'components'");
  for (const auto& c : j["components"]) {
    check_keys(c, "mixture.component", {"weight", "boxes"});
    MixtureComponent comp;
    comp.weight = get_num(c.at("weight"), "weight");
    for (const auto& b : c.at("boxes")) {
      check_keys(b, "mixture.component.box", {"lower", "upper"});
      comp.boxes.push_back(
          {get_vec(b.at("lower"), "lower"), get_vec(b.at("upper"), "upper")});
    }
    mix.components.push_back(std::move(comp));
  }
  mix.validate();
  return mix;
}

}  // namespace

EstimationConfig problem_config_from_json(const std::string& text) {
  return estimation_from(parse(text));
}

HypoDistanceConfig hypodist_config_from_json(const std::string& text, int space_dim) {
  return hypodist_from(parse(text), space_dim);
}

StudyConfig study_config_from_json(const std::string& text) {
  const njson j = parse(text);
  check_keys(j, "study config",
             {"study", "mixture", "estimation", "n_values", "seeds", "kl_samples",
              "dl_ball_samples", "dl_rho_nodes", "threads", "N_values", "seed"});
  StudyConfig sc;
  if (!j.contains("study")) fail(Errc::schema_error, "study config needs 'study'");
  sc.kind = j["study"].get<std::string>();
  if (sc.kind != "consistency" && sc.kind != "scaling")
    fail(Errc::schema_error, "study must be 'consistency' or 'scaling'");
  if (!j.contains("estimation")) fail(Errc::schema_error, "study config needs 'estimation'");
  EstimationConfig est = estimation_from(j["estimation"]);
  MixtureOfUniforms mix = j.contains("mixture")
                              ? mixture_from(j["mixture"], est.box)
                              : MixtureOfUniforms::two_bump_default();
  if (sc.kind == "consistency") {
    sc.consistency.mixture = mix;
    sc.consistency.estimation = est;
    if (j.contains("n_values")) sc.consistency.n_values = get_ivec(j["n_values"], "n_values");
    if (j.contains("seeds"))
      for (const auto& s : j["seeds"]) sc.consistency.seeds.push_back(s.get<std::uint64_t>());
    if (j.contains("kl_samples")) sc.consistency.kl_samples = j["kl_samples"].get<int>();
    if (j.contains("dl_ball_samples"))
      sc.consistency.dl_ball_samples = j["dl_ball_samples"].get<int>();
    if (j.contains("dl_rho_nodes")) sc.consistency.dl_rho_nodes = j["dl_rho_nodes"].get<int>();
    if (j.contains("threads")) sc.consistency.threads = j["threads"].get<int>();
    if (sc.consistency.n_values.empty() || sc.consistency.seeds.empty())
      fail(Errc::schema_error, "consistency study needs 'n_values' and 'seeds'");
  } else {
    sc.scaling.mixture = mix;
    sc.scaling.estimation = est;
    if (j.contains("N_values")) sc.scaling.N_values = get_ivec(j["N_values"], "N_values");
    if (j.contains("n_values")) sc.scaling.n_values = get_ivec(j["n_values"], "n_values");
    if (j.contains("seed")) sc.scaling.seed = j["seed"].get<std::uint64_t>();
  }
  return sc;
}

LoadedSample load_sample_csv(const std::string& path, const BoxDomain& box,
                             bool with_response) {
  const std::string text = read_file(path);
  const int d = box.dim();
  const int want = d + (with_response ? 1 : 0);
  std::vector<double> values;
  std::vector<std::string> fields;
  std::istringstream lines(text);
  std::string line;
  int rows = 0;
  bool first = true;
  while (std::getline(lines, line)) {
    if (line.empty() || line == "\r") continue;
    fields.clear();
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) fields.push_back(tok);
    if (static_cast<int>(fields.size()) != want)
      fail(Errc::io_error, "sample CSV row with " + std::to_string(fields.size()) +
                               " fields, expected " + std::to_string(want));
    bool numeric = true;
    std::vector<double> row(want);
    for (int i = 0; i < want; ++i) {
      try {
        std::size_t pos = 0;
        row[i] = std::stod(fields[i], &pos);
        while (pos < fields[i].size() && std::isspace(static_cast<unsigned char>(fields[i][pos]))) ++pos;
        if (pos != fields[i].size()) numeric = false;
      } catch (...) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      fail(Errc::io_error, "non-numeric sample CSV row: " + line);
    }
    first = false;
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) fail(Errc::io_error, "sample CSV has no data rows");
  Eigen::MatrixXd cov(rows, d);
  std::optional<Eigen::VectorXd> resp;
  if (with_response) resp = Eigen::VectorXd(rows);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < d; ++i) cov(r, i) = values[r * want + i];
    if (with_response) (*resp)[r] = values[r * want + d];
  }
  auto [sample, rejected] = ingest_sample(cov, resp, box);
  if (sample.size() == 0) fail(Errc::io_error, "all sample rows fall outside the box");
  return {std::move(sample), rejected};
}

std::string grid_to_csv(const GridEvaluation& grid) {
  std::string s;
  const int d = static_cast<int>(grid.points.cols());
  for (int i = 0; i < d; ++i) s += "x" + std::to_string(i + 1) + ",";
  s += "value\n";
  for (Eigen::Index r = 0; r < grid.points.rows(); ++r) {
    for (int i = 0; i < d; ++i) s += format_double(grid.points(r, i)) + ",";
    s += format_double(grid.values[r]) + "\n";
  }
  return s;
}

std::string study_to_csv(const StudyResult& result) {
  std::string s = "n,seed,N,lambda,kl,kl_se,dl_truth,wall_time,feasible,n_variables\n";
  for (const auto& r : result.rows) {
    s += std::to_string(r.n) + "," + std::to_string(r.seed) + "," + std::to_string(r.N) +
         "," + format_double(r.lambda) + ",";
    s += (std::isfinite(r.kl) ? format_double(r.kl) : "inf") + std::string(",");
    s += (std::isfinite(r.kl_se) ? format_double(r.kl_se) : "inf") + std::string(",");
    s += format_double(r.dl_truth) + "," + format_double(r.wall_time) + ",";
    s += std::string(r.feasible ? "1" : "0") + "," + std::to_string(r.n_variables) + "\n";
  }
  return s;
}

}  // namespace epifit::io
