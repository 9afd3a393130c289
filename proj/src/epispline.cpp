#include "epifit/epispline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "epifit/kernels.hpp"

namespace epifit {

EpiSpline::EpiSpline(std::shared_ptr<const SimplicialComplex> complex,
                     Eigen::VectorXd heights)
    : complex_(std::move(complex)), heights_(std::move(heights)) {
  const auto n = static_cast<Eigen::Index>(complex_->num_simplices()) *
                 (complex_->dim() + 1);
  if (heights_.size() != n)
    fail(Errc::invalid_argument, "heights must have N*(d+1) entries");
  if (!heights_.allFinite())
    fail(Errc::invalid_argument, "heights must be finite");
}

EpiSpline EpiSpline::constant(std::shared_ptr<const SimplicialComplex> complex,
                              double value) {
  const auto n = static_cast<Eigen::Index>(complex->num_simplices()) *
                 (complex->dim() + 1);
  return EpiSpline(std::move(complex), Eigen::VectorXd::Constant(n, value));
}

double EpiSpline::evaluate(const Eigen::VectorXd& x) const {
  const int d1 = complex_->dim() + 1;
  const auto locs = complex_->locate_all(x);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& loc : locs) {
    double v = 0.0;
    for (int i = 0; i < d1; ++i) v += loc.barycentric[i] * heights_[loc.simplex * d1 + i];
    best = std::max(best, v);
  }
  return best;
}

void EpiSpline::evaluate_batch(const Eigen::MatrixXd& xs, Eigen::VectorXd& out) const {
  const int d = complex_->dim();
  const auto n = xs.rows();
  out.resize(n);
  if (d == 1) {
    kernels::KuhnGrid1D g;
    g.lo = complex_->box().lower[0];
    g.cells = complex_->cells_per_dim()[0];
    g.inv_h = g.cells / (complex_->box().upper[0] - g.lo);
    Eigen::VectorXd col0 = xs.col(0);
    kernels::eval_batch_1d(g, heights_.data(), col0.data(), n, out.data());
    return;
  }
  if (d == 2) {
    kernels::KuhnGrid2D g;
    g.lo0 = complex_->box().lower[0];
    g.lo1 = complex_->box().lower[1];
    g.cells0 = complex_->cells_per_dim()[0];
    g.cells1 = complex_->cells_per_dim()[1];
    g.inv_h0 = g.cells0 / (complex_->box().upper[0] - g.lo0);
    g.inv_h1 = g.cells1 / (complex_->box().upper[1] - g.lo1);
    Eigen::VectorXd col0 = xs.col(0), col1 = xs.col(1);
    kernels::eval_batch_2d(g, heights_.data(), col0.data(), col1.data(), n, out.data());
    return;
  }
  const int d1 = d + 1;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto loc = complex_->locate(xs.row(r).transpose());
    double v = 0.0;
    for (int i = 0; i < d1; ++i) v += loc.barycentric[i] * heights_[loc.simplex * d1 + i];
    out[r] = v;
  }
}

Eigen::VectorXd EpiSpline::piece_gradient(int k) const {
  const int d1 = complex_->dim() + 1;
  return complex_->gradient_map(k) * heights_.segment(k * d1, d1);
}

double EpiSpline::piece_offset(int k) const {
  return height(k, 0) - piece_gradient(k).dot(complex_->simplex_vertex_coords(k, 0));
}

double EpiSpline::integral() const {
  const int d1 = complex_->dim() + 1;
  const int N = complex_->num_simplices();
  double acc = 0.0;
  for (int k = 0; k < N; ++k) {
    double s = 0.0;
    for (int i = 0; i < d1; ++i) s += heights_[k * d1 + i];
    acc += complex_->volume(k) * s;
  }
  return acc / d1;
}

Eigen::VectorXd EpiSpline::first_moment() const {
  const int d = complex_->dim();
  const int d1 = d + 1;
  const int N = complex_->num_simplices();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  for (int k = 0; k < N; ++k) {
    // int_T lam_i lam_j = vol * (1 + delta_ij) / ((d+1)(d+2))
    const double w = complex_->volume(k) / (static_cast<double>(d1) * (d + 2));
    Eigen::VectorXd csum = Eigen::VectorXd::Zero(d);
    double hsum = 0.0;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d1; ++i) {
      const Eigen::VectorXd ci = complex_->simplex_vertex_coords(k, i);
      csum += ci;
      hsum += heights_[k * d1 + i];
      diag += ci * heights_[k * d1 + i];
    }
    m += w * (csum * hsum + diag);
  }
  return m;
}

double quadratic_form(const EpiSpline& f, const EpiSpline& g) {
  if (&f.complex() != &g.complex() && !f.complex().same_grid(g.complex()))
    fail(Errc::invalid_argument, "quadratic_form requires a shared complex");
  const auto& cx = f.complex();
  const int d1 = cx.dim() + 1;
  double acc = 0.0;
  for (int k = 0; k < cx.num_simplices(); ++k) {
    const double w = cx.volume(k) / (static_cast<double>(d1) * (cx.dim() + 2));
    double fs = 0.0, gs = 0.0, diag = 0.0;
    for (int i = 0; i < d1; ++i) {
      fs += f.height(k, i);
      gs += g.height(k, i);
      diag += f.height(k, i) * g.height(k, i);
    }
    acc += w * (fs * gs + diag);
  }
  return acc;
}

Eigen::SparseMatrix<double> quadratic_form_matrix(const SimplicialComplex& cx) {
  const int d1 = cx.dim() + 1;
  const int n = cx.num_simplices() * d1;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(cx.num_simplices()) * d1 * d1);
  for (int k = 0; k < cx.num_simplices(); ++k) {
    const double w = cx.volume(k) / (static_cast<double>(d1) * (cx.dim() + 2));
    for (int i = 0; i < d1; ++i)
      for (int j = 0; j < d1; ++j)
        trips.emplace_back(k * d1 + i, k * d1 + j, w * (i == j ? 2.0 : 1.0));
  }
  Eigen::SparseMatrix<double> Q(n, n);
  Q.setFromTriplets(trips.begin(), trips.end());
  return Q;
}

Eigen::VectorXd integral_coefficients(const SimplicialComplex& cx) {
  const int d1 = cx.dim() + 1;
  Eigen::VectorXd a(cx.num_simplices() * d1);
  for (int k = 0; k < cx.num_simplices(); ++k)
    for (int i = 0; i < d1; ++i) a[k * d1 + i] = cx.volume(k) / d1;
  return a;
}

Eigen::MatrixXd moment_coefficients(const SimplicialComplex& cx) {
  const int d = cx.dim();
  const int d1 = d + 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, cx.num_simplices() * d1);
  for (int k = 0; k < cx.num_simplices(); ++k) {
    const double w = cx.volume(k) / (static_cast<double>(d1) * (d + 2));
    Eigen::VectorXd csum = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d1; ++i) csum += cx.simplex_vertex_coords(k, i);
    for (int j = 0; j < d1; ++j)
      M.col(k * d1 + j) = w * (csum + cx.simplex_vertex_coords(k, j));
  }
  return M;
}

Eigen::VectorXd EpiSpline::vertex_values() const {
  const int d1 = complex_->dim() + 1;
  Eigen::VectorXd vals =
      Eigen::VectorXd::Constant(complex_->num_vertices(),
                                -std::numeric_limits<double>::infinity());
  for (int v = 0; v < complex_->num_vertices(); ++v)
    for (const auto& [k, i] : complex_->vertex_incidence(v))
      vals[v] = std::max(vals[v], heights_[k * d1 + i]);
  return vals;
}

std::pair<double, std::vector<Eigen::VectorXd>> EpiSpline::sup_and_argmax(
    double tol_argmax) const {
  // Affine pieces attain extrema at vertices.
  const Eigen::VectorXd vals = vertex_values();
  const double sup = vals.maxCoeff();
  std::vector<Eigen::VectorXd> arg;
  for (int v = 0; v < complex_->num_vertices(); ++v)
    if (vals[v] >= sup - tol_argmax) arg.push_back(complex_->vertex(v));
  return {sup, arg};
}

std::vector<Eigen::VectorXd> EpiSpline::superlevel_points(double alpha) const {
  const Eigen::VectorXd vals = vertex_values();
  std::vector<Eigen::VectorXd> pts;
  for (int v = 0; v < complex_->num_vertices(); ++v)
    if (vals[v] >= alpha) pts.push_back(complex_->vertex(v));
  return pts;
}

EpiSpline EpiSpline::prolongate(std::shared_ptr<const SimplicialComplex> finer) const {
  if (finer->dim() != complex_->dim() ||
      finer->box().lower != complex_->box().lower ||
      finer->box().upper != complex_->box().upper)
    fail(Errc::invalid_argument, "prolongate requires a refinement of the same box");
  const int d1 = finer->dim() + 1;
  // Evaluate per unique vertex once, then scatter to per-simplex storage.
  Eigen::VectorXd vvals(finer->num_vertices());
  for (int v = 0; v < finer->num_vertices(); ++v) vvals[v] = evaluate(finer->vertex(v));
  Eigen::VectorXd h(static_cast<Eigen::Index>(finer->num_simplices()) * d1);
  for (int k = 0; k < finer->num_simplices(); ++k)
    for (int i = 0; i < d1; ++i) h[k * d1 + i] = vvals[finer->simplex_vertex(k, i)];
  return EpiSpline(std::move(finer), std::move(h));
}

GridEvaluation eval_grid(const EpiSpline& f, const std::vector<int>& resolution) {
  const auto& cx = f.complex();
  const int d = cx.dim();
  if (static_cast<int>(resolution.size()) != d)
    fail(Errc::invalid_argument, "eval_grid resolution must have one entry per dimension");
  Eigen::Index n = 1;
  for (int r : resolution) {
    if (r < 2) fail(Errc::invalid_argument, "eval_grid needs at least 2 points per dim");
    n *= r;
  }
  GridEvaluation out;
  out.points.resize(n, d);
  out.values.resize(n);
  std::vector<int> idx(d, 0);
  Eigen::VectorXd x(d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int i = 0; i < d; ++i)
      x[i] = cx.box().lower[i] +
             idx[i] * (cx.box().upper[i] - cx.box().lower[i]) / (resolution[i] - 1);
    out.points.row(r) = x.transpose();
    out.values[r] = f.evaluate(x);
    for (int i = 0; i < d; ++i) {
      if (++idx[i] < resolution[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

}  // namespace epifit
