#include <doctest.h>

#include <random>

#include "epifit/losses.hpp"
#include "support/oracles.hpp"

using namespace epifit;

namespace {

BoxDomain unit_box(int d) {
  BoxDomain box;
  box.lower = Eigen::VectorXd::Zero(d);
  box.upper = Eigen::VectorXd::Ones(d);
  return box;
}

Sample random_sample(const BoxDomain& box, int n, std::uint64_t seed,
                     bool with_response) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Sample s;
  s.covariates.resize(n, box.dim());
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < box.dim(); ++i)
      s.covariates(r, i) =
          box.lower[i] + unif(rng) * (box.upper[i] - box.lower[i]);
  if (with_response) {
    s.responses = Eigen::VectorXd(n);
    for (int r = 0; r < n; ++r) (*s.responses)[r] = unif(rng) * 2.0 - 0.5;
  }
  return s;
}

Eigen::VectorXd positive_heights(const SimplicialComplex& cx, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.3, 2.5);
  Eigen::VectorXd h(cx.num_simplices() * (cx.dim() + 1));
  for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = unif(rng);
  return h;
}

}  // namespace

TEST_CASE("ingestion rejects out-of-box rows with a count") {
  const BoxDomain box = unit_box(2);
  Eigen::MatrixXd cov(4, 2);
  cov << 0.5, 0.5, 1.5, 0.5, 0.2, 0.9, -0.1, 0.0;
  const auto [sample, rejected] = ingest_sample(cov, std::nullopt, box);
  CHECK(sample.size() == 2);
  CHECK(rejected == 2);
}

TEST_CASE("compile preconditions") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  Sample empty;
  empty.covariates.resize(0, 2);
  CHECK_THROWS_AS(CompiledLoss::compile(LossKind::ml_density, empty, cx), Error);
  Sample s = random_sample(unit_box(2), 5, 1, false);
  CHECK_THROWS_AS(CompiledLoss::compile(LossKind::ls_regression, s, cx), Error);
  Sample sr = random_sample(unit_box(2), 5, 1, true);
  CHECK_THROWS_AS(CompiledLoss::compile(LossKind::ml_density, sr, cx), Error);
}

TEST_CASE("ml density: one datum at a centroid with constant heights") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {2, 2});
  Sample s;
  s.covariates.resize(1, 2);
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(2);
  for (int i = 0; i <= 2; ++i) centroid += cx->simplex_vertex_coords(3, i);
  s.covariates.row(0) = (centroid / 3.0).transpose();
  const auto loss = CompiledLoss::compile(LossKind::ml_density, s, cx);
  const auto ev = loss.value_grad_hess(Eigen::VectorXd::Constant(cx->num_simplices() * 3, 3.0));
  CHECK(ev.finite);
  CHECK(ev.value == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("ml density signals nonpositive values with a push direction") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {2});
  Sample s;
  s.covariates.resize(2, 1);
  s.covariates << 0.25, 0.75;
  const auto loss = CompiledLoss::compile(LossKind::ml_density, s, cx);
  Eigen::VectorXd h(4);
  h << -1.0, -1.0, 1.0, 1.0;  // f(0.25) < 0
  const auto ev = loss.value_grad_hess(h);
  CHECK(!ev.finite);
  CHECK(std::isinf(ev.value));
  REQUIRE(ev.nonpositive_data.size() == 1);
  CHECK(ev.nonpositive_data[0] == 0);
  // moving along the push direction restores positivity eventually
  Eigen::VectorXd fx;
  loss.data_values(h + 10.0 * ev.push_direction, fx);
  CHECK(fx[0] > 0.0);
}

TEST_CASE("ls regression: exact interpolation gives zero loss") {
  auto cx = SimplicialComplex::kuhn(unit_box(1), {2});
  Sample s;
  s.covariates.resize(3, 1);
  s.covariates << 0.1, 0.4, 0.9;
  s.responses = Eigen::VectorXd(3);
  // responses from an affine function representable on the mesh
  for (int j = 0; j < 3; ++j) (*s.responses)[j] = 2.0 * s.covariates(j, 0) + 1.0;
  const auto loss = CompiledLoss::compile(LossKind::ls_regression, s, cx);
  Eigen::VectorXd h(4);
  h << 1.0, 2.0, 2.0, 3.0;  // the affine function itself
  const auto ev = loss.value_grad_hess(h);
  CHECK(ev.value == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(ev.grad.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ls density value cross-checks against the quadratic form") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  const Sample s = random_sample(unit_box(2), 40, 3, false);
  const auto loss = CompiledLoss::compile(LossKind::ls_density, s, cx);
  const EpiSpline f = oracles::random_spline(cx, 4);
  const auto ev = loss.value_grad_hess(f.heights());
  Eigen::VectorXd fx;
  loss.data_values(f.heights(), fx);
  const double direct = -2.0 * fx.mean() + quadratic_form(f, f);
  CHECK(ev.value == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("gradients and hessian actions match finite differences") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {2, 2});
  const Sample plain = random_sample(unit_box(2), 25, 7, false);
  const Sample with_resp = random_sample(unit_box(2), 25, 7, true);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  for (LossKind kind :
       {LossKind::ml_density, LossKind::ls_density, LossKind::ls_regression}) {
    const Sample& s = kind == LossKind::ls_regression ? with_resp : plain;
    const auto loss = CompiledLoss::compile(kind, s, cx);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Eigen::VectorXd h = positive_heights(*cx, seed * 13 + static_cast<int>(kind));
      const auto ev = loss.value_grad_hess(h);
      REQUIRE(ev.finite);
      auto value_of = [&](const Eigen::VectorXd& x) {
        return loss.value_grad_hess(x).value;
      };
      const Eigen::VectorXd g_fd = oracles::fd_gradient(value_of, h);
      CHECK((g_fd - ev.grad).norm() <= 1e-5 * (1.0 + ev.grad.norm()));

      // directional hessian check
      Eigen::VectorXd dir(h.size());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = unif(rng);
      dir.normalize();
      const double step = 1e-6;
      const Eigen::VectorXd gp = loss.value_grad_hess(h + step * dir).grad;
      const Eigen::VectorXd gm = loss.value_grad_hess(h - step * dir).grad;
      const Eigen::VectorXd h_fd = (gp - gm) / (2.0 * step);
      Eigen::VectorXd h_ap;
      ev.hess.apply(dir, h_ap);
      CHECK((h_fd - h_ap).norm() <= 1e-4 * (1.0 + h_ap.norm()));
    }
  }
}

TEST_CASE("losses are convex along segments") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {2, 2});
  const Sample plain = random_sample(unit_box(2), 30, 17, false);
  const Sample with_resp = random_sample(unit_box(2), 30, 17, true);
  std::mt19937_64 rng(18);
  for (LossKind kind :
       {LossKind::ml_density, LossKind::ls_density, LossKind::ls_regression}) {
    const Sample& s = kind == LossKind::ls_regression ? with_resp : plain;
    const auto loss = CompiledLoss::compile(kind, s, cx);
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::VectorXd h1 = positive_heights(*cx, rng());
      const Eigen::VectorXd h2 = positive_heights(*cx, rng());
      const double v1 = loss.value_grad_hess(h1).value;
      const double v2 = loss.value_grad_hess(h2).value;
      for (double t : {0.25, 0.5, 0.75}) {
        const double vm = loss.value_grad_hess(t * h1 + (1.0 - t) * h2).value;
        CHECK(vm <= t * v1 + (1.0 - t) * v2 + 1e-10);
      }
    }
  }
}

TEST_CASE("decision-variable count is independent of the sample size") {
  auto cx = SimplicialComplex::kuhn(unit_box(2), {3, 3});
  int expected = cx->num_simplices() * 3;
  for (int n : {10, 100, 1000}) {
    const Sample s = random_sample(unit_box(2), n, 19, false);
    const auto loss = CompiledLoss::compile(LossKind::ml_density, s, cx);
    CHECK(loss.num_heights() == expected);
    CHECK(loss.num_data() == n);
  }
}
