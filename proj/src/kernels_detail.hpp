#pragma once

#include "epifit/kernels.hpp"

namespace epifit::kernels::avx2 {

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

}  // namespace epifit::kernels::avx2
