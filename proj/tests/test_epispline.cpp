#include <doctest.h>

#include <random>

#include "epifit/epispline.hpp"
#include "support/oracles.hpp"

using namespace epifit;

namespace {

BoxDomain unit_box(int d) {
  BoxDomain box;
  box.lower = Eigen::VectorXd::Zero(d);
  box.upper = Eigen::VectorXd::Ones(d);
  return box;
}

}  // namespace

TEST_CASE("constant spline evaluates to the constant") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {4, 4});
  const EpiSpline f = EpiSpline::constant(cx, 3.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    Eigen::Vector2d x(unif(rng), unif(rng));
    CHECK(f.evaluate(x) == doctest::Approx(3.0));
  }
  CHECK(f.evaluate(Eigen::Vector2d(0.0, 0.0)) == doctest::Approx(3.0));
  CHECK(f.integral() == doctest::Approx(1.0 * 3.0));
}

TEST_CASE("usc convention takes the max over incident pieces") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {2});
  // discontinuous: piece 0 ends at height 1, piece 1 starts at height 5
  Eigen::VectorXd h(4);
  h << 0.0, 1.0, 5.0, 2.0;
  const EpiSpline f(cx, h);
  CHECK(f.evaluate(Eigen::VectorXd::Constant(1, 0.5)) == doctest::Approx(5.0));
  CHECK(f.evaluate(Eigen::VectorXd::Constant(1, 0.25)) == doctest::Approx(0.5));
  CHECK(f.evaluate(Eigen::VectorXd::Constant(1, 1.0)) == doctest::Approx(2.0));
}

TEST_CASE("evaluate agrees with an independent locate + dot re-derivation") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {5, 3});
  const EpiSpline f = oracles::random_spline(cx, 7);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(0.001, 0.999);
  for (int t = 0; t < 500; ++t) {
    Eigen::Vector2d x(unif(rng), unif(rng));
    const Location loc = cx->locate(x);
    double v = 0.0;
    for (int i = 0; i <= 2; ++i) v += loc.barycentric[i] * f.height(loc.simplex, i);
    CHECK(f.evaluate(x) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("piece gradients reproduce vertex heights") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  const EpiSpline f = oracles::random_spline(cx, 9);
  for (int k = 0; k < cx->num_simplices(); ++k) {
    const Eigen::VectorXd g = f.piece_gradient(k);
    const double b = f.piece_offset(k);
    for (int i = 0; i <= 2; ++i) {
      const double v = g.dot(cx->simplex_vertex_coords(k, i)) + b;
      CHECK(v == doctest::Approx(f.height(k, i)).epsilon(1e-9));
    }
  }
  // 1d: heights (0,1) over [0, 0.5] has slope 2
  auto cx1 = SimplicialComplex::kuhn(unit_box(1), {2});
  Eigen::VectorXd h(4);
  h << 0.0, 1.0, 1.0, 0.0;
  const EpiSpline f1(cx1, h);
  CHECK(f1.piece_gradient(0)[0] == doctest::Approx(2.0));
  CHECK(f1.piece_gradient(1)[0] == doctest::Approx(-2.0));
  // constant piece has zero gradient
  const EpiSpline fc = EpiSpline::constant(cx1, 4.0);
  CHECK(fc.piece_gradient(0).norm() == doctest::Approx(0.0));
}

TEST_CASE("integral closed forms: fixed cases") {
  auto cx1 = SimplicialComplex::kuhn(unit_box(1), {2});
  Eigen::VectorXd h(4);
  h << 0.0, 1.0, 1.0, 0.0;  // tent of height 1
  CHECK(EpiSpline(cx1, h).integral() == doctest::Approx(0.5));

  auto cx2 = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  CHECK(EpiSpline::constant(cx2, 1.0).integral() == doctest::Approx(1.0));
  const Eigen::VectorXd m = EpiSpline::constant(cx2, 1.0).first_moment();
  CHECK(m[0] == doctest::Approx(0.5));
  CHECK(m[1] == doctest::Approx(0.5));
  CHECK(EpiSpline::constant(cx2, 0.0).first_moment().norm() == doctest::Approx(0.0));

  CHECK(quadratic_form(EpiSpline::constant(cx2, 1.0), EpiSpline::constant(cx2, 1.0)) ==
        doctest::Approx(1.0));
  CHECK(quadratic_form(EpiSpline::constant(cx2, 2.0), EpiSpline::constant(cx2, 3.0)) ==
        doctest::Approx(6.0));
}

TEST_CASE("integral, moment and quadratic form match the Monte-Carlo oracle") {
  for (int d : {1, 2}) {
    auto cx = SimplicialComplex::kuhn(unit_box(d), d == 1 ? std::vector<int>{9}
                                                          : std::vector<int>{4, 5});
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      const EpiSpline f = oracles::random_spline(cx, seed);
      const EpiSpline g = oracles::random_spline(cx, seed + 1000);
      const auto mc = oracles::mc_functionals(f, g, 400000, seed * 31 + 1);
      CHECK(mc.integral.within(f.integral(), 3.0));
      const Eigen::VectorXd mom = f.first_moment();
      for (int i = 0; i < d; ++i) CHECK(mc.moment[i].within(mom[i], 3.0));
      CHECK(mc.quad.within(quadratic_form(f, g), 3.0));
    }
  }
}

TEST_CASE("integral is linear in the heights") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {4, 4});
  const EpiSpline f = oracles::random_spline(cx, 21);
  const EpiSpline g = oracles::random_spline(cx, 22);
  const double a = 1.7, b = -0.4;
  const EpiSpline combo(cx, a * f.heights() + b * g.heights());
  CHECK(combo.integral() ==
        doctest::Approx(a * f.integral() + b * g.integral()).epsilon(1e-12));
}

TEST_CASE("quadratic form is positive semidefinite and zero only at zero") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const EpiSpline f = oracles::random_spline(cx, seed);
    CHECK(quadratic_form(f, f) >= 0.0);
  }
  CHECK(quadratic_form(EpiSpline::constant(cx, 0.0), EpiSpline::constant(cx, 0.0)) ==
        0.0);
  // nonzero heights give a strictly positive form
  Eigen::VectorXd h = Eigen::VectorXd::Zero(cx->num_simplices() * 3);
  h[5] = 1e-3;
  CHECK(quadratic_form(EpiSpline(cx, h), EpiSpline(cx, h)) > 0.0);
}

TEST_CASE("sup_and_argmax attains the vertex max and matches a grid scan") {
  auto cx1 = SimplicialComplex::kuhn(unit_box(1), {2});
  Eigen::VectorXd h(4);
  h << 0.0, 1.0, 1.0, 0.0;
  const auto [sup, arg] = EpiSpline(cx1, h).sup_and_argmax();
  CHECK(sup == doctest::Approx(1.0));
  REQUIRE(arg.size() == 1);
  CHECK(arg[0][0] == doctest::Approx(0.5));

  auto cx = SimplicialComplex::kuhn(unit_box(2), {4, 3});
  const EpiSpline f = oracles::random_spline(cx, 33);
  const auto [sup2, arg2] = f.sup_and_argmax();
  const auto grid = eval_grid(f, {4 * 10 + 1, 3 * 10 + 1});
  CHECK(grid.values.maxCoeff() <= sup2 + 1e-12);
  // the aligned grid contains every complex vertex, so the max is attained
  CHECK(grid.values.maxCoeff() == doctest::Approx(sup2).epsilon(1e-12));

  const EpiSpline fc = EpiSpline::constant(cx, 2.5);
  const auto [supc, argc] = fc.sup_and_argmax();
  CHECK(supc == doctest::Approx(2.5));
  CHECK(static_cast<int>(argc.size()) == cx->num_vertices());
}

TEST_CASE("superlevel_points") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  const EpiSpline f = oracles::random_spline(cx, 44);
  CHECK(static_cast<int>(
            f.superlevel_points(-std::numeric_limits<double>::infinity()).size()) ==
        cx->num_vertices());
  const auto [sup, arg] = f.sup_and_argmax();
  CHECK(f.superlevel_points(sup + 1.0).empty());

  const Eigen::VectorXd vals = f.vertex_values();
  std::vector<double> sorted(vals.data(), vals.data() + vals.size());
  std::sort(sorted.begin(), sorted.end());
  const double alpha = sorted[sorted.size() / 2];
  const auto pts = f.superlevel_points(alpha);
  for (const auto& p : pts) CHECK(f.evaluate(p) >= alpha - 1e-12);
  int count = 0;
  for (int v = 0; v < cx->num_vertices(); ++v)
    if (vals[v] >= alpha) ++count;
  CHECK(static_cast<int>(pts.size()) == count);
}

TEST_CASE("prolongate: constants, identity grids, and mesh-error bound") {
  auto coarse = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  auto fine = SimplicialComplex::kuhn(unit_box(2), {6, 6});
  const EpiSpline c = EpiSpline::constant(coarse, 1.3);
  const EpiSpline cp = c.prolongate(fine);
  CHECK(cp.heights().minCoeff() == doctest::Approx(1.3));
  CHECK(cp.heights().maxCoeff() == doctest::Approx(1.3));

  const EpiSpline f = oracles::random_spline(coarse, 55);
  const EpiSpline fs = f.prolongate(SimplicialComplex::kuhn(unit_box(2), {3, 3}));
  for (int v = 0; v < coarse->num_vertices(); ++v)
    CHECK(fs.evaluate(coarse->vertex(v)) == doctest::Approx(f.evaluate(coarse->vertex(v))));

  // Lipschitz interpolant: sup difference on a probe grid bounded by
  // kappa * coarse mesh size
  auto target = [](const Eigen::Vector2d& x) {
    return 1.0 - std::abs(x[0] - 0.31) - 0.5 * std::abs(x[1] - 0.47);
  };
  Eigen::VectorXd h(coarse->num_simplices() * 3);
  for (int k = 0; k < coarse->num_simplices(); ++k)
    for (int i = 0; i <= 2; ++i)
      h[k * 3 + i] = target(coarse->simplex_vertex_coords(k, i));
  const EpiSpline interp(coarse, h);
  const EpiSpline lifted = interp.prolongate(fine);
  const double kappa = 1.5;  // 1-norm Lipschitz modulus of the target
  const double mesh = std::sqrt(2.0) / 3.0;
  const auto probe = eval_grid(lifted, {25, 25});
  Eigen::VectorXd base;
  interp.evaluate_batch(probe.points, base);
  double worst = 0.0;
  for (Eigen::Index r = 0; r < base.size(); ++r)
    worst = std::max(worst, std::abs(base[r] - probe.values[r]));
  CHECK(worst <= kappa * mesh + 1e-12);
}

TEST_CASE("eval_grid exports the usc values on the aligned grid") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {2});
  Eigen::VectorXd h(4);
  h << 0.0, 1.0, 5.0, 2.0;
  const EpiSpline f(cx, h);
  const auto grid = eval_grid(f, {5});
  CHECK(grid.points.rows() == 5);
  CHECK(grid.values[2] == doctest::Approx(5.0));  // usc at the interior vertex
  CHECK(grid.values[0] == doctest::Approx(0.0));
  CHECK(grid.values[4] == doctest::Approx(2.0));
}

TEST_CASE("evaluate_batch matches evaluate off the facets") {
  for (int d : {1, 2}) {
    auto cx = SimplicialComplex::kuhn(unit_box(d), d == 1 ? std::vector<int>{7}
                                                          : std::vector<int>{5, 4});
    const EpiSpline f = oracles::random_spline(cx, 66 + d);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd pts(1000, d);
    for (int r = 0; r < 1000; ++r)
      for (int i = 0; i < d; ++i) pts(r, i) = unif(rng);
    Eigen::VectorXd batch;
    f.evaluate_batch(pts, batch);
    for (int r = 0; r < 1000; ++r) {
      const double direct = f.evaluate(pts.row(r).transpose());
      CHECK(batch[r] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}
