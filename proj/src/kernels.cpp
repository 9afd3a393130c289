#include "epifit/kernels.hpp"

#include <cmath>
#include <limits>

#ifdef EPIFIT_HAVE_AVX2
#include "kernels_detail.hpp"
#endif

namespace epifit::kernels {

namespace ref {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double step_to_boundary(const double* s, const double* ds, std::size_t n) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (ds[i] < 0.0) {
      const double r = s[i] / (-ds[i]);
      if (r < best) best = r;
    }
  }
  return best;
}

void sphere_lower_bounds(const double* q, const double* const* centers_soa,
                         const double* radii, std::size_t n_simplices, int dim,
                         double* out) {
  for (std::size_t k = 0; k < n_simplices; ++k) {
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double dlt = q[j] - centers_soa[j][k];
      acc += dlt * dlt;
    }
    const double lb = std::sqrt(acc) - radii[k];
    out[k] = lb > 0.0 ? lb : 0.0;
  }
}

void eval_batch_1d(const KuhnGrid1D& g, const double* heights, const double* xs,
                   std::size_t n, double* out) {
  const double last = static_cast<double>(g.cells - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double s = (xs[i] - g.lo) * g.inv_h;
    double c = std::floor(s);
    if (c < 0.0) c = 0.0;
    if (c > last) c = last;
    const double t = s - c;
    const std::size_t k = static_cast<std::size_t>(c);
    const double h0 = heights[2 * k];
    const double h1 = heights[2 * k + 1];
    out[i] = h0 + t * (h1 - h0);
  }
}

void eval_batch_2d(const KuhnGrid2D& g, const double* heights, const double* x0,
                   const double* x1, std::size_t n, double* out) {
  const double last0 = static_cast<double>(g.cells0 - 1);
  const double last1 = static_cast<double>(g.cells1 - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double s0 = (x0[i] - g.lo0) * g.inv_h0;
    double s1 = (x1[i] - g.lo1) * g.inv_h1;
    double c0 = std::floor(s0);
    double c1 = std::floor(s1);
    if (c0 < 0.0) c0 = 0.0;
    if (c0 > last0) c0 = last0;
    if (c1 < 0.0) c1 = 0.0;
    if (c1 > last1) c1 = last1;
    const double t0 = s0 - c0;
    const double t1 = s1 - c1;
    const double cell = c0 + static_cast<double>(g.cells0) * c1;
    // Kuhn split of the cell: permutation (0,1) owns t0 >= t1, else (1,0).
    double mu0, mu1, mu2, rank;
    if (t0 >= t1) {
      mu0 = 1.0 - t0;
      mu1 = t0 - t1;
      mu2 = t1;
      rank = 0.0;
    } else {
      mu0 = 1.0 - t1;
      mu1 = t1 - t0;
      mu2 = t0;
      rank = 1.0;
    }
    const std::size_t base = 3 * static_cast<std::size_t>(2.0 * cell + rank);
    out[i] = (mu0 * heights[base] + mu1 * heights[base + 1]) + mu2 * heights[base + 2];
  }
}

}  // namespace ref

namespace {

struct Dispatch {
  const char* name;
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*step_to_boundary)(const double*, const double*, std::size_t);
  void (*sphere_lower_bounds)(const double*, const double* const*, const double*,
                              std::size_t, int, double*);
  void (*eval_batch_1d)(const KuhnGrid1D&, const double*, const double*, std::size_t,
                        double*);
  void (*eval_batch_2d)(const KuhnGrid2D&, const double*, const double*, const double*,
                        std::size_t, double*);
};

const Dispatch kScalar = {
    "scalar",        ref::dot,           ref::sum,
    ref::axpy,       ref::step_to_boundary, ref::sphere_lower_bounds,
    ref::eval_batch_1d, ref::eval_batch_2d,
};

#ifdef EPIFIT_HAVE_AVX2
const Dispatch kAvx2 = {
    "avx2",           avx2::dot,           avx2::sum,
    avx2::axpy,       avx2::step_to_boundary, avx2::sphere_lower_bounds,
    avx2::eval_batch_1d, avx2::eval_batch_2d,
};

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

Dispatch pick_default() {
#ifdef EPIFIT_HAVE_AVX2
  if (cpu_has_avx2()) return kAvx2;
#endif
  return kScalar;
}

Dispatch& active() {
  static Dispatch d = pick_default();
  return d;
}

}  // namespace

const std::string& active_target() {
  static std::string name;
  name = active().name;
  return name;
}

bool set_target(const std::string& name) {
  if (name == "scalar") {
    active() = kScalar;
    return true;
  }
#ifdef EPIFIT_HAVE_AVX2
  if (name == "avx2" && cpu_has_avx2()) {
    active() = kAvx2;
    return true;
  }
#endif
  return false;
}

double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
double sum(const double* a, std::size_t n) { return active().sum(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
double step_to_boundary(const double* s, const double* ds, std::size_t n) {
  return active().step_to_boundary(s, ds, n);
}
void sphere_lower_bounds(const double* q, const double* const* centers_soa,
                         const double* radii, std::size_t n_simplices, int dim,
                         double* out) {
  active().sphere_lower_bounds(q, centers_soa, radii, n_simplices, dim, out);
}
void eval_batch_1d(const KuhnGrid1D& g, const double* heights, const double* xs,
                   std::size_t n, double* out) {
  active().eval_batch_1d(g, heights, xs, n, out);
}
void eval_batch_2d(const KuhnGrid2D& g, const double* heights, const double* x0,
                   const double* x1, std::size_t n, double* out) {
  active().eval_batch_2d(g, heights, x0, x1, n, out);
}

}  // namespace epifit::kernels
