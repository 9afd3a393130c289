#include <doctest.h>

#include <random>

#include "epifit/constraints.hpp"
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

TEST_CASE("row counts for the basic density constraints") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {10, 10});  // N = 200
  const std::vector<ConstraintSpec> specs{spec::Nonnegativity{},
                                          spec::IntegralEquals{1.0}};
  const StandardForm form = assemble(specs, *cx);
  CHECK(form.n_vars == 600);
  CHECK(form.G.rows() == 600);  // one bound row per tent pole
  CHECK(form.A.rows() == 1);
  CHECK(form.socs.empty());
  // audit: every row maps to its spec
  for (int r = 0; r < form.G.rows(); ++r) CHECK(form.ineq_spec[r] == 0);
  CHECK(form.eq_spec[0] == 1);
}

TEST_CASE("argmax coverage emits N(d+1) rows per point") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {10, 10});
  const std::vector<ConstraintSpec> specs{
      spec::ArgmaxCovers{{Eigen::Vector2d(0.4702, 0.4657)}}};
  const StandardForm form = assemble(specs, *cx);
  CHECK(form.G.rows() == 600);
  CHECK(form.A.rows() == 0);
  // the covered point's simplex heights form a forced-equal group
  REQUIRE(form.forced_equal_groups.size() == 1);
  CHECK(form.forced_equal_groups[0].size() == 3);
  // two points double the row count
  const std::vector<ConstraintSpec> two{spec::ArgmaxCovers{
      {Eigen::Vector2d(0.4702, 0.4657), Eigen::Vector2d(0.7746, 0.7773)}}};
  CHECK(assemble(two, *cx).G.rows() == 1200);
  // out-of-box points are rejected
  const std::vector<ConstraintSpec> bad{
      spec::ArgmaxCovers{{Eigen::Vector2d(1.5, 0.5)}}};
  CHECK_THROWS_AS(assemble(bad, *cx), Error);
}

TEST_CASE("integral band, level sets, bounds, moments: row shapes") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  const int nv = cx->num_simplices() * 3;
  {
    const StandardForm f = assemble({spec::IntegralBand{1.0, 1e-3}}, *cx);
    CHECK(f.G.rows() == 2);
    CHECK(f.A.rows() == 0);
  }
  {
    const StandardForm f = assemble(
        {spec::LevelSetCovers{{Eigen::Vector2d(0.2, 0.3), Eigen::Vector2d(0.9, 0.1)},
                              0.5}},
        *cx);
    CHECK(f.G.rows() == 2);
  }
  {
    spec::PointwiseBounds pb;
    pb.lower = 0.0001;
    pb.upper = 10000.0;
    const StandardForm f = assemble({pb}, *cx);
    CHECK(f.G.rows() == 2 * nv);
  }
  {
    const StandardForm f = assemble(
        {spec::MomentBox{Eigen::Vector2d(0.4, 0.4), Eigen::Vector2d(0.6, 0.6)}}, *cx);
    CHECK(f.G.rows() == 4);
  }
  {
    spec::PointwiseBounds pb;
    pb.lower = 2.0;
    pb.upper = 1.0;
    CHECK_THROWS_AS(assemble({pb}, *cx), Error);
  }
}

TEST_CASE("continuity chains every coincident vertex pair") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  const StandardForm f = assemble({spec::Continuity{}}, *cx);
  // sum over unique vertices of (incidences - 1)
  int expected = 0;
  for (int v = 0; v < cx->num_vertices(); ++v)
    expected += static_cast<int>(cx->vertex_incidence(v).size()) - 1;
  CHECK(f.A.rows() == expected);
  CHECK(static_cast<int>(f.alias_pairs.size()) == expected);
  for (int r = 0; r < f.A.rows(); ++r) CHECK(f.b[r] == 0.0);
}

TEST_CASE("lipschitz bound: soc blocks, linear variants, kappa zero") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {2, 2});
  {
    const StandardForm f =
        assemble({spec::LipschitzBound{10.0, GradNorm::euclidean}}, *cx);
    CHECK(static_cast<int>(f.socs.size()) == cx->num_simplices());
    for (const auto& s : f.socs) CHECK(s.bound == 10.0);
  }
  {
    const StandardForm f = assemble({spec::LipschitzBound{10.0, GradNorm::max}}, *cx);
    CHECK(f.G.rows() == cx->num_simplices() * 2 * 2);
    CHECK(f.socs.empty());
  }
  {
    const StandardForm f = assemble({spec::LipschitzBound{10.0, GradNorm::one}}, *cx);
    CHECK(f.G.rows() == cx->num_simplices() * 4);  // all sign patterns
  }
  {
    // kappa = 0 flattens every simplex through alias rows
    const StandardForm f =
        assemble({spec::LipschitzBound{0.0, GradNorm::euclidean}}, *cx);
    CHECK(f.socs.empty());
    CHECK(f.G.rows() == 0);
    CHECK(f.A.rows() > 0);
  }
}

TEST_CASE("audit: removing a spec removes exactly its rows") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  spec::PointwiseBounds pb;
  pb.upper = 5.0;
  const std::vector<ConstraintSpec> both{spec::Nonnegativity{}, pb};
  const StandardForm f2 = assemble(both, *cx);
  const StandardForm f1 = assemble({spec::Nonnegativity{}}, *cx);
  int rows_spec0 = 0;
  for (int s : f2.ineq_spec)
    if (s == 0) ++rows_spec0;
  CHECK(rows_spec0 == f1.G.rows());
  CHECK(f2.G.rows() - rows_spec0 == cx->num_simplices() * 3);
}

TEST_CASE("penalty block: epigraph rows and exact recomputation") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  CHECK(assemble_penalty(0.0, *cx).n_aux == 0);

  const double lambda = 0.05;
  const PenaltyBlock pb = assemble_penalty(lambda, *cx);
  CHECK(pb.n_aux == cx->num_simplices() * 2);
  CHECK(pb.rows.rows() == 2 * pb.n_aux);
  CHECK(pb.rows.cols() == cx->num_simplices() * 3 + pb.n_aux);

  const EpiSpline c = EpiSpline::constant(cx, 2.0);
  CHECK(pb.value(c) == doctest::Approx(0.0));

  const EpiSpline f = oracles::random_spline(cx, 5);
  double direct = 0.0;
  for (int k = 0; k < cx->num_simplices(); ++k)
    direct += f.piece_gradient(k).cwiseAbs().sum();
  CHECK(pb.value(f) == doctest::Approx(lambda * direct).epsilon(1e-10));

  // rows hold with the aux at the lower envelope |g|
  Eigen::VectorXd z(pb.rows.cols());
  z.head(f.heights().size()) = f.heights();
  for (int k = 0; k < cx->num_simplices(); ++k) {
    const Eigen::VectorXd g = f.piece_gradient(k);
    for (int j = 0; j < 2; ++j) z[f.heights().size() + k * 2 + j] = std::abs(g[j]);
  }
  const Eigen::VectorXd rows_val = pb.rows * z;
  CHECK(rows_val.maxCoeff() <= 1e-10);
}

TEST_CASE("concavity rows accept concave interpolants and reject bumps") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {4, 4});
  const StandardForm form = assemble({spec::Concavity{}}, *cx);

  auto interpolate = [&](auto&& fn) {
    Eigen::VectorXd h(cx->num_simplices() * 3);
    for (int k = 0; k < cx->num_simplices(); ++k)
      for (int i = 0; i <= 2; ++i) h[k * 3 + i] = fn(cx->simplex_vertex_coords(k, i));
    return h;
  };
  const Eigen::VectorXd concave_h = interpolate([](const Eigen::VectorXd& x) {
    return 1.0 - (x[0] - 0.4) * (x[0] - 0.4) - 0.5 * (x[1] - 0.6) * (x[1] - 0.6);
  });
  CHECK((form.G * concave_h - form.u).maxCoeff() <= 1e-12);

  // a sharp bump at one vertex violates some row
  Eigen::VectorXd bump_h = interpolate([](const Eigen::VectorXd&) { return 0.0; });
  const int bump_vertex = cx->simplex_vertex(0, 2);
  for (int k = 0; k < cx->num_simplices(); ++k)
    for (int i = 0; i <= 2; ++i)
      if (cx->simplex_vertex(k, i) == bump_vertex) bump_h[k * 3 + i] = 1.0;
  CHECK((form.G * bump_h - form.u).maxCoeff() > 1e-6);

  const EpiSpline fc(cx, concave_h);
  CHECK(check_semantic({spec::Concavity{}}, fc).ok);
}

TEST_CASE("monotone rows") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  const std::vector<ConstraintSpec> specs{spec::Monotone{{+1, -1}}};
  const StandardForm form = assemble(specs, *cx);
  CHECK(form.G.rows() == cx->num_simplices() * 2);

  Eigen::VectorXd h(cx->num_simplices() * 3);
  for (int k = 0; k < cx->num_simplices(); ++k)
    for (int i = 0; i <= 2; ++i) {
      const Eigen::VectorXd c = cx->simplex_vertex_coords(k, i);
      h[k * 3 + i] = 2.0 * c[0] - 3.0 * c[1];
    }
  CHECK((form.G * h - form.u).maxCoeff() <= 1e-10);
  CHECK(check_semantic(specs, EpiSpline(cx, h)).ok);
  CHECK(!check_semantic({spec::Monotone{{-1, 0}}}, EpiSpline(cx, h)).ok);
}

TEST_CASE("semantic checks flag violations") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  const EpiSpline f = EpiSpline::constant(cx, 1.0);
  CHECK(check_semantic({spec::IntegralEquals{1.0}}, f).ok);
  CHECK(!check_semantic({spec::IntegralEquals{2.0}}, f).ok);
  CHECK(check_semantic({spec::IntegralBand{1.05, 0.1}}, f).ok);
  CHECK(!check_semantic({spec::IntegralBand{1.5, 0.1}}, f).ok);
  CHECK(check_semantic({spec::Nonnegativity{}}, f).ok);
  CHECK(check_semantic({spec::Continuity{}}, f).ok);
  CHECK(check_semantic({spec::LipschitzBound{0.5, GradNorm::euclidean}}, f).ok);

  Eigen::VectorXd h = f.heights();
  h[7] = 3.0;
  const EpiSpline g(cx, h);
  CHECK(!check_semantic({spec::Continuity{}}, g).ok);
  CHECK(!check_semantic({spec::LipschitzBound{0.5, GradNorm::euclidean}}, g).ok);
}
