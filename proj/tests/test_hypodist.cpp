#include <doctest.h>

#include <random>

#include "epifit/hypodist.hpp"
#include "support/oracles.hpp"

using namespace epifit;

namespace {

BoxDomain unit_box(int d) {
  BoxDomain box;
  box.lower = Eigen::VectorXd::Zero(d);
  box.upper = Eigen::VectorXd::Ones(d);
  return box;
}

HypoDistanceConfig small_cfg(const BoxDomain& box, int ball_samples = 512,
                             int rho_nodes = 24) {
  HypoDistanceConfig cfg = HypoDistanceConfig::defaults_for(box);
  cfg.ball_samples = ball_samples;
  cfg.rho_nodes = rho_nodes;
  return cfg;
}

}  // namespace

TEST_CASE("points inside the hypograph have distance zero") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  const EpiSpline f = oracles::random_spline(cx, 3, 0.5, 2.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.01, 0.99);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd p(3);
    p[0] = unif(rng);
    p[1] = unif(rng);
    p[2] = f.evaluate(p.head(2)) - 0.5;  // strictly below the graph
    CHECK(dist_point_to_hypo(p, f) == 0.0);
  }
}

TEST_CASE("distance straight down to a flat spline") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {4});
  const EpiSpline f = EpiSpline::constant(cx, 0.0);
  Eigen::VectorXd p(2);
  p << 0.5, 1.0;
  CHECK(dist_point_to_hypo(p, f) == doctest::Approx(1.0));
  // outside the box the wall distance appears
  p << 2.0, 0.0;
  CHECK(dist_point_to_hypo(p, f) == doctest::Approx(1.0));
  p << 2.0, 1.0;
  CHECK(dist_point_to_hypo(p, f) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("distance matches the exact form for constant splines") {
  for (int d : {1, 2, 3}) {
    auto cx = SimplicialComplex::kuhn(unit_box(d), std::vector<int>(d, d == 3 ? 2 : 3));
    const double level = 0.8;
    const EpiSpline f = EpiSpline::constant(cx, level);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-2.0, 3.0);
    for (int t = 0; t < 200; ++t) {
      Eigen::VectorXd p(d + 1);
      for (int i = 0; i <= d; ++i) p[i] = unif(rng);
      const double exact = oracles::constant_hypo_distance(p, cx->box(), level);
      CHECK(dist_point_to_hypo(p, f) == doctest::Approx(exact).epsilon(1e-9));
    }
  }
}

TEST_CASE("distance matches a dense boundary-sampling oracle") {
  // 1d: the boundary sample is fine enough for a 1e-3 certificate
  auto cx1 = SimplicialComplex::kuhn(unit_box(1), {3});
  const EpiSpline f1 = oracles::random_spline(cx1, 16, -0.5, 1.5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(-1.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd p(2);
    for (int i = 0; i < 2; ++i) p[i] = unif(rng);
    const double fast = dist_point_to_hypo(p, f1);
    const double dense = oracles::dense_hypo_distance(p, f1, 20001, 4000);
    if (fast == 0.0) {
      CHECK(dense <= 1e-3);
    } else {
      CHECK(fast <= dense + 1e-12);  // sampled boundary points are feasible
      CHECK(dense - fast <= 1e-3);
    }
  }
  // 2d: coarser grid, coarser certificate
  auto cx = SimplicialComplex::kuhn(unit_box(2), {2, 2});
  const EpiSpline f = oracles::random_spline(cx, 17, -0.5, 1.5);
  for (int t = 0; t < 12; ++t) {
    Eigen::VectorXd p(3);
    for (int i = 0; i < 3; ++i) p[i] = unif(rng);
    const double fast = dist_point_to_hypo(p, f);
    const double dense = oracles::dense_hypo_distance(p, f, 220, 220);
    if (fast == 0.0) {
      CHECK(dense <= 0.02);
    } else {
      CHECK(fast <= dense + 1e-12);
      CHECK(dense - fast <= 0.02);
    }
  }
}

TEST_CASE("dl_rho: identity, symmetry, and the two-level oracle") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {2, 2});
  const EpiSpline f = oracles::random_spline(cx, 21);
  const EpiSpline g = oracles::random_spline(cx, 22);
  const auto cfg = small_cfg(cx->box());
  CHECK(dl_rho(f, f, 2.0, cfg) == 0.0);
  CHECK(dl_rho(f, g, 2.0, cfg) == dl_rho(g, f, 2.0, cfg));

  // f = 0 and g = 1 on the unit square, center (0.5, 0.5, 0), rho = 2:
  // the difference of hypograph distances attains 1 on a thick region.
  const EpiSpline zero = EpiSpline::constant(cx, 0.0);
  const EpiSpline one = EpiSpline::constant(cx, 1.0);
  HypoDistanceConfig cfg2 = small_cfg(cx->box(), 8192, 24);
  const double sampled = dl_rho(zero, one, 2.0, cfg2);
  // dense oracle with the exact constant-hypograph distances
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double oracle = 0.0;
  Eigen::VectorXd cen(3);
  cen << 0.5, 0.5, 0.0;
  for (int t = 0; t < 1000000; ++t) {
    Eigen::VectorXd dir(3);
    for (int i = 0; i < 3; ++i) dir[i] = gauss(rng);
    dir.normalize();
    const Eigen::VectorXd p = cen + 2.0 * std::cbrt(unif(rng)) * dir;
    const double df = oracles::constant_hypo_distance(p, cx->box(), 0.0);
    const double dg = oracles::constant_hypo_distance(p, cx->box(), 1.0);
    oracle = std::max(oracle, std::abs(df - dg));
  }
  CHECK(sampled == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("dl: identity, symmetry, curve monotonicity, truncation bound") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {4});
  const EpiSpline f = oracles::random_spline(cx, 31);
  const EpiSpline g = oracles::random_spline(cx, 32);
  const auto cfg = small_cfg(cx->box());

  const auto self = dl(f, f, cfg);
  CHECK(self.dl_value == 0.0);

  const auto fg = dl(f, g, cfg);
  const auto gf = dl(g, f, cfg);
  CHECK(fg.dl_value == gf.dl_value);
  CHECK(fg.dl_value > 0.0);
  CHECK(fg.truncation_bound > 0.0);
  for (std::size_t i = 1; i < fg.dl_rho_curve.size(); ++i)
    CHECK(fg.dl_rho_curve[i].second >= fg.dl_rho_curve[i - 1].second);
}

TEST_CASE("dl_rho is nondecreasing in rho with nested samples") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {2, 2});
  const EpiSpline f = oracles::random_spline(cx, 41);
  const EpiSpline g = oracles::random_spline(cx, 42);
  const auto cfg = small_cfg(cx->box(), 256, 24);
  double prev = 0.0;
  for (double rho : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double v = dl_rho(f, g, rho, cfg);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("triangle inequality with quadrature and sampling slack") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {4});
  const auto cfg = small_cfg(cx->box(), 256, 16);
  std::mt19937_64 rng(51);
  for (int t = 0; t < 100; ++t) {
    const EpiSpline f = oracles::random_spline(cx, rng());
    const EpiSpline g = oracles::random_spline(cx, rng());
    const EpiSpline h = oracles::random_spline(cx, rng());
    const auto fh = dl(f, h, cfg);
    const auto fg = dl(f, g, cfg);
    const auto gh = dl(g, h, cfg);
    const double slack =
        2.0 * std::max({fh.truncation_bound, fg.truncation_bound, gh.truncation_bound}) +
        fh.resolution_estimate;
    CHECK(fh.dl_value <= fg.dl_value + gh.dl_value + slack);
  }
}

TEST_CASE("positivity: splines that differ at a vertex have positive distance") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {4});
  const EpiSpline f = EpiSpline::constant(cx, 0.5);
  Eigen::VectorXd h = f.heights();
  h[4] += 0.6;
  const EpiSpline g(cx, h);
  const auto cfg = small_cfg(cx->box());
  CHECK(dl(f, g, cfg).dl_value > 1e-4);
}

TEST_CASE("refinement convergence toward a Lipschitz target") {
  auto target = [](double x) { return 1.0 - std::abs(x - 0.37); };
  auto fine = SimplicialComplex::kuhn(unit_box(1), {64});
  Eigen::VectorXd hf(fine->num_simplices() * 2);
  for (int k = 0; k < fine->num_simplices(); ++k)
    for (int i = 0; i < 2; ++i)
      hf[k * 2 + i] = target(fine->simplex_vertex_coords(k, i)[0]);
  const EpiSpline reference(fine, hf);

  const auto cfg = small_cfg(fine->box(), 1024, 24);
  double prev = std::numeric_limits<double>::infinity();
  for (int cells : {4, 8, 16}) {
    auto cx = SimplicialComplex::kuhn(unit_box(1), {cells});
    Eigen::VectorXd h(cx->num_simplices() * 2);
    for (int k = 0; k < cx->num_simplices(); ++k)
      for (int i = 0; i < 2; ++i)
        h[k * 2 + i] = target(cx->simplex_vertex_coords(k, i)[0]);
    const double v = dl(EpiSpline(cx, h), reference, cfg).dl_value;
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("distance between splines on different grids of the same box") {
  auto coarse = SimplicialComplex::kuhn(unit_box(1), {4});
  auto fine = SimplicialComplex::kuhn(unit_box(1), {16});
  auto target = [](double x) { return 1.0 - std::abs(x - 0.43); };
  auto interp = [&](std::shared_ptr<const SimplicialComplex> cx) {
    Eigen::VectorXd h(cx->num_simplices() * 2);
    for (int k = 0; k < cx->num_simplices(); ++k)
      for (int i = 0; i < 2; ++i) h[k * 2 + i] = target(cx->simplex_vertex_coords(k, i)[0]);
    return EpiSpline(cx, h);
  };
  const auto cfg = small_cfg(unit_box(1), 256, 16);
  const double d_cf = dl(interp(coarse), interp(fine), cfg).dl_value;
  CHECK(d_cf >= 0.0);
  CHECK(d_cf < 0.2);  // interpolants of the same target stay close
  CHECK(d_cf == dl(interp(fine), interp(coarse), cfg).dl_value);
}

TEST_CASE("ball sampling is deterministic and stays in the ball") {
  HypoDistanceConfig cfg;
  cfg.center = Eigen::Vector3d(0.5, 0.5, 0.0);
  cfg.rho_max = 4.0;
  cfg.rho_nodes = 16;
  cfg.ball_samples = 128;
  const auto s1 = detail::ball_samples(cfg, 3);
  const auto s2 = detail::ball_samples(cfg, 3);
  CHECK((s1.points - s2.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s1.radii[0] == 0.0);
  for (int i = 0; i < cfg.ball_samples; ++i) {
    CHECK((s1.points.row(i).transpose() - cfg.center).norm() <=
          cfg.rho_max * (1.0 + 1e-12));
    CHECK(s1.radii[i] <= cfg.rho_max);
  }
  cfg.norm = BallNorm::max;
  const auto s3 = detail::ball_samples(cfg, 3);
  for (int i = 0; i < cfg.ball_samples; ++i)
    CHECK((s3.points.row(i).transpose() - cfg.center).cwiseAbs().maxCoeff() <=
          cfg.rho_max * (1.0 + 1e-12));
}

TEST_CASE("inverse normal cdf sanity") {
  CHECK(detail::inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(detail::inverse_normal_cdf(0.9772498680518208) ==
        doctest::Approx(2.0).epsilon(1e-6));
  CHECK(detail::inverse_normal_cdf(0.0013498980316301035) ==
        doctest::Approx(-3.0).epsilon(1e-6));
}
