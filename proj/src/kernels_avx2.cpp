// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// only ever called after a runtime cpuid check (see kernels.cpp). Elementwise
// kernels use explicit mul/add (no fma contraction) so each lane reproduces
// the scalar reference bitwise.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "kernels_detail.hpp"

namespace epifit::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double hmin(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_min_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_min_sd(lo, swapped));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double step_to_boundary(const double* s, const double* ds, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d best = inf;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vds = _mm256_loadu_pd(ds + i);
    const __m256d mask = _mm256_cmp_pd(vds, zero, _CMP_LT_OQ);
    const __m256d ratio = _mm256_div_pd(_mm256_loadu_pd(s + i), _mm256_sub_pd(zero, vds));
    best = _mm256_min_pd(best, _mm256_blendv_pd(inf, ratio, mask));
  }
  double r = hmin(best);
  for (; i < n; ++i) {
    if (ds[i] < 0.0) {
      const double t = s[i] / (-ds[i]);
      if (t < r) r = t;
    }
  }
  return r;
}

void sphere_lower_bounds(const double* q, const double* const* centers_soa,
                         const double* radii, std::size_t n_simplices, int dim,
                         double* out) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n_simplices; k += 4) {
    __m256d acc = zero;
    for (int j = 0; j < dim; ++j) {
      const __m256d dlt =
          _mm256_sub_pd(_mm256_set1_pd(q[j]), _mm256_loadu_pd(centers_soa[j] + k));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(dlt, dlt));
    }
    const __m256d lb = _mm256_sub_pd(_mm256_sqrt_pd(acc), _mm256_loadu_pd(radii + k));
    _mm256_storeu_pd(out + k, _mm256_max_pd(lb, zero));
  }
  for (; k < n_simplices; ++k) {
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
  const __m256d lo = _mm256_set1_pd(g.lo);
  const __m256d inv_h = _mm256_set1_pd(g.inv_h);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d last = _mm256_set1_pd(static_cast<double>(g.cells - 1));
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(xs + i), lo), inv_h);
    __m256d c = _mm256_floor_pd(s);
    c = _mm256_min_pd(_mm256_max_pd(c, zero), last);
    const __m256d t = _mm256_sub_pd(s, c);
    const __m128i base = _mm256_cvttpd_epi32(_mm256_mul_pd(c, two));
    const __m256d h0 = _mm256_i32gather_pd(heights, base, 8);
    const __m256d h1 = _mm256_i32gather_pd(heights + 1, base, 8);
    const __m256d v = _mm256_add_pd(h0, _mm256_mul_pd(t, _mm256_sub_pd(h1, h0)));
    _mm256_storeu_pd(out + i, v);
  }
  if (i < n) ref::eval_batch_1d(g, heights, xs + i, n - i, out + i);
}

void eval_batch_2d(const KuhnGrid2D& g, const double* heights, const double* x0,
                   const double* x1, std::size_t n, double* out) {
  const __m256d lo0 = _mm256_set1_pd(g.lo0), lo1 = _mm256_set1_pd(g.lo1);
  const __m256d ih0 = _mm256_set1_pd(g.inv_h0), ih1 = _mm256_set1_pd(g.inv_h1);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d last0 = _mm256_set1_pd(static_cast<double>(g.cells0 - 1));
  const __m256d last1 = _mm256_set1_pd(static_cast<double>(g.cells1 - 1));
  const __m256d ncells0 = _mm256_set1_pd(static_cast<double>(g.cells0));
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d three = _mm256_set1_pd(3.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s0 = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x0 + i), lo0), ih0);
    const __m256d s1 = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x1 + i), lo1), ih1);
    __m256d c0 = _mm256_min_pd(_mm256_max_pd(_mm256_floor_pd(s0), zero), last0);
    __m256d c1 = _mm256_min_pd(_mm256_max_pd(_mm256_floor_pd(s1), zero), last1);
    const __m256d t0 = _mm256_sub_pd(s0, c0);
    const __m256d t1 = _mm256_sub_pd(s1, c1);
    const __m256d m01 = _mm256_cmp_pd(t0, t1, _CMP_GE_OQ);  // permutation (0,1)
    const __m256d tmax = _mm256_blendv_pd(t1, t0, m01);
    const __m256d tmin = _mm256_blendv_pd(t0, t1, m01);
    const __m256d mu0 = _mm256_sub_pd(one, tmax);
    const __m256d mu1 = _mm256_sub_pd(tmax, tmin);
    const __m256d mu2 = tmin;
    const __m256d rank = _mm256_blendv_pd(one, zero, m01);
    const __m256d cell = _mm256_add_pd(c0, _mm256_mul_pd(ncells0, c1));
    const __m256d simplex = _mm256_add_pd(_mm256_mul_pd(two, cell), rank);
    const __m128i base = _mm256_cvttpd_epi32(_mm256_mul_pd(simplex, three));
    const __m256d h0 = _mm256_i32gather_pd(heights, base, 8);
    const __m256d h1 = _mm256_i32gather_pd(heights + 1, base, 8);
    const __m256d h2 = _mm256_i32gather_pd(heights + 2, base, 8);
    const __m256d v = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(mu0, h0), _mm256_mul_pd(mu1, h1)),
        _mm256_mul_pd(mu2, h2));
    _mm256_storeu_pd(out + i, v);
  }
  if (i < n) ref::eval_batch_2d(g, heights, x0 + i, x1 + i, n - i, out + i);
}

}  // namespace epifit::kernels::avx2
