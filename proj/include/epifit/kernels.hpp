#pragma once

#include <cstddef>
#include <string>

// Numeric inner-loop kernels. Every kernel has a scalar reference
// implementation; on x86-64 an AVX2+FMA variant is selected once at startup
// when the CPU supports it. Lane-exact kernels (eval_batch_*) produce
// bitwise-identical results across variants; reducing kernels (dot, sum)
// reassociate and agree to ~1e-13 relative.
namespace epifit::kernels {

// Name of the active dispatch target: "scalar" or "avx2".
const std::string& active_target();

// Force a target (testing only). Returns false if unavailable.
bool set_target(const std::string& name);

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Largest step alpha such that s + alpha*ds >= 0 componentwise would first
// hit zero; returns +inf when ds is nonnegative everywhere.
double step_to_boundary(const double* s, const double* ds, std::size_t n);

// out[k] = max(0, sqrt(|q - center_k|^2) - radius_k), centers stored SoA
// (one contiguous array per coordinate). Lower bounds for point-to-simplex
// distances used to prune hypograph projections.
void sphere_lower_bounds(const double* q, const double* const* centers_soa,
                         const double* radii, std::size_t n_simplices, int dim,
                         double* out);

// Batched evaluation of a piecewise-affine function on a Kuhn grid.
// Coordinates in SoA layout (xs[dim][i]); heights indexed per simplex as
// heights[simplex*(dim+1)+vertex]. Points must lie inside the box (callers
// clamp). Uses the lowest-index containment rule; values match the scalar
// path bitwise.
struct KuhnGrid1D {
  double lo, inv_h;  // inv_h = cells / (hi - lo)
  int cells;
};
struct KuhnGrid2D {
  double lo0, lo1, inv_h0, inv_h1;
  int cells0, cells1;
};
void eval_batch_1d(const KuhnGrid1D& g, const double* heights, const double* xs,
                   std::size_t n, double* out);
void eval_batch_2d(const KuhnGrid2D& g, const double* heights, const double* x0,
                   const double* x1, std::size_t n, double* out);

namespace ref {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double step_to_boundary(const double* s, const double* ds, std::size_t n);
void sphere_lower_bounds(const double* q, const double* const* centers_soa,
                         const double* radii, std::size_t n_simplices, int dim,
                         double* out);
void eval_batch_1d(const KuhnGrid1D& g, const double* heights, const double* xs,
                   std::size_t n, double* out);
void eval_batch_2d(const KuhnGrid2D& g, const double* heights, const double* x0,
                   const double* x1, std::size_t n, double* out);
}  // namespace ref

}  // namespace epifit::kernels
