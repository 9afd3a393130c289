#include <doctest.h>

#include <random>
#include <vector>

#include "epifit/kernels.hpp"

using namespace epifit;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -2.0,
                               double hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = unif(rng);
  return v;
}

bool have_avx2() { return kernels::set_target("avx2"); }

struct TargetGuard {
  ~TargetGuard() { kernels::set_target("scalar"); kernels::set_target("avx2"); }
};

}  // namespace

TEST_CASE("reducing kernels agree across targets to tight relative error") {
  if (!have_avx2()) return;  // nothing to compare on this host
  TargetGuard guard;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (std::size_t n : {1u, 3u, 7u, 64u, 1001u}) {
      const auto a = random_vec(n, seed);
      const auto b = random_vec(n, seed + 100);
      const double dot_ref = kernels::ref::dot(a.data(), b.data(), n);
      const double sum_ref = kernels::ref::sum(a.data(), n);
      kernels::set_target("avx2");
      const double dot_v = kernels::dot(a.data(), b.data(), n);
      const double sum_v = kernels::sum(a.data(), n);
      CHECK(std::abs(dot_v - dot_ref) <= 1e-13 * (1.0 + std::abs(dot_ref)));
      CHECK(std::abs(sum_v - sum_ref) <= 1e-13 * (1.0 + std::abs(sum_ref)));
    }
  }
}

TEST_CASE("elementwise kernels are bitwise identical across targets") {
  if (!have_avx2()) return;
  TargetGuard guard;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const std::size_t n = 257;
    const auto x = random_vec(n, seed);
    auto y1 = random_vec(n, seed + 7);
    auto y2 = y1;
    kernels::ref::axpy(0.37, x.data(), y1.data(), n);
    kernels::set_target("avx2");
    kernels::axpy(0.37, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);

    auto s = random_vec(n, seed + 13, 0.1, 3.0);
    auto ds = random_vec(n, seed + 17);
    const double r_ref = kernels::ref::step_to_boundary(s.data(), ds.data(), n);
    const double r_v = kernels::step_to_boundary(s.data(), ds.data(), n);
    CHECK(r_ref == r_v);
  }
}

TEST_CASE("sphere lower bounds match bitwise") {
  if (!have_avx2()) return;
  TargetGuard guard;
  const std::size_t n = 103;
  const int dim = 3;
  auto c0 = random_vec(n, 2), c1 = random_vec(n, 3), c2 = random_vec(n, 4);
  auto radii = random_vec(n, 5, 0.0, 0.5);
  const double q[3] = {0.3, -0.2, 0.9};
  const double* centers[3] = {c0.data(), c1.data(), c2.data()};
  std::vector<double> out_ref(n), out_v(n);
  kernels::ref::sphere_lower_bounds(q, centers, radii.data(), n, dim, out_ref.data());
  kernels::set_target("avx2");
  kernels::sphere_lower_bounds(q, centers, radii.data(), n, dim, out_v.data());
  for (std::size_t i = 0; i < n; ++i) CHECK(out_ref[i] == out_v[i]);
}

TEST_CASE("kuhn eval batches are bitwise identical across targets") {
  if (!have_avx2()) return;
  TargetGuard guard;
  {
    kernels::KuhnGrid1D g{0.0, 8.0, 8};  // box [0,1], 8 cells
    const auto heights = random_vec(16, 11);
    const auto xs = random_vec(513, 12, 0.0, 1.0);
    std::vector<double> out_ref(xs.size()), out_v(xs.size());
    kernels::ref::eval_batch_1d(g, heights.data(), xs.data(), xs.size(), out_ref.data());
    kernels::set_target("avx2");
    kernels::eval_batch_1d(g, heights.data(), xs.data(), xs.size(), out_v.data());
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(out_ref[i] == out_v[i]);
  }
  {
    kernels::KuhnGrid2D g{0.0, 0.0, 5.0, 4.0, 5, 4};
    const auto heights = random_vec(5 * 4 * 2 * 3, 21);
    const auto x0 = random_vec(301, 22, 0.0, 1.0);
    const auto x1 = random_vec(301, 23, 0.0, 1.0);
    std::vector<double> out_ref(x0.size()), out_v(x0.size());
    kernels::ref::eval_batch_2d(g, heights.data(), x0.data(), x1.data(), x0.size(),
                                out_ref.data());
    kernels::set_target("avx2");
    kernels::eval_batch_2d(g, heights.data(), x0.data(), x1.data(), x0.size(),
                           out_v.data());
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(out_ref[i] == out_v[i]);
  }
}

TEST_CASE("scalar reference values are sane") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{4.0, 5.0, 6.0};
  CHECK(kernels::ref::dot(a.data(), b.data(), 3) == doctest::Approx(32.0));
  CHECK(kernels::ref::sum(a.data(), 3) == doctest::Approx(6.0));
  const std::vector<double> s{1.0, 2.0};
  const std::vector<double> ds{-0.5, 1.0};
  CHECK(kernels::ref::step_to_boundary(s.data(), ds.data(), 2) == doctest::Approx(2.0));
}
