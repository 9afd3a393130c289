#include "epifit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace epifit {

std::pair<Sample, int> ingest_sample(const Eigen::MatrixXd& covariates,
                                     const std::optional<Eigen::VectorXd>& responses,
                                     const BoxDomain& box, double tol) {
  if (responses && responses->size() != covariates.rows())
    fail(Errc::invalid_argument, "responses must match covariate rows");
  std::vector<int> keep;
  for (Eigen::Index r = 0; r < covariates.rows(); ++r)
    if (box.contains(covariates.row(r).transpose(), tol)) keep.push_back(static_cast<int>(r));
  Sample s;
  s.covariates.resize(keep.size(), covariates.cols());
  if (responses) s.responses = Eigen::VectorXd(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    s.covariates.row(i) = covariates.row(keep[i]);
    if (responses) (*s.responses)[i] = (*responses)[keep[i]];
  }
  return {std::move(s), static_cast<int>(covariates.rows() - keep.size())};
}

void BlockDiagHessian::apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  out.setZero(v.size());
  const int bs = block_size;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int base = simplices[b] * bs;
    out.segment(base, bs).noalias() += blocks[b] * v.segment(base, bs);
  }
}

void BlockDiagHessian::append_triplets(std::vector<Eigen::Triplet<double>>& trips,
                                       const std::vector<int>& col_of_height) const {
  const int bs = block_size;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int base = simplices[b] * bs;
    for (int i = 0; i < bs; ++i)
      for (int j = 0; j < bs; ++j) {
        const double v = blocks[b](i, j);
        if (v != 0.0)
          trips.emplace_back(col_of_height[base + i], col_of_height[base + j], v);
      }
  }
}

CompiledLoss CompiledLoss::compile(LossKind kind, const Sample& sample,
                                   std::shared_ptr<const SimplicialComplex> complex) {
  if (sample.size() == 0) fail(Errc::invalid_argument, "empty sample");
  if ((kind == LossKind::ls_regression) != sample.responses.has_value())
    fail(Errc::invalid_argument, "responses must be present exactly for regression");
  const int d = complex->dim();
  if (sample.covariates.cols() != d)
    fail(Errc::invalid_argument, "sample dimension does not match the complex");

  CompiledLoss cl;
  cl.kind_ = kind;
  cl.complex_ = complex;
  cl.n_ = sample.size();
  cl.n_heights_ = complex->num_simplices() * (d + 1);
  cl.rows_.resize(cl.n_);
  cl.data_of_simplex_.assign(complex->num_simplices(), {});
  for (int j = 0; j < cl.n_; ++j) {
    const Location loc = complex->locate(sample.covariates.row(j).transpose());
    cl.rows_[j].simplex = loc.simplex;
    for (int i = 0; i <= d; ++i) cl.rows_[j].w[i] = loc.barycentric[i];
    cl.data_of_simplex_[loc.simplex].push_back(j);
  }
  for (int k = 0; k < complex->num_simplices(); ++k)
    if (!cl.data_of_simplex_[k].empty()) cl.touched_.push_back(k);
  if (kind == LossKind::ls_regression) cl.responses_ = *sample.responses;
  if (kind == LossKind::ls_density) cl.Q_ = quadratic_form_matrix(*complex);
  return cl;
}

void CompiledLoss::data_values(const Eigen::VectorXd& h, Eigen::VectorXd& out) const {
  const int d1 = complex_->dim() + 1;
  out.resize(n_);
  for (int j = 0; j < n_; ++j) {
    const auto& row = rows_[j];
    double v = 0.0;
    for (int i = 0; i < d1; ++i) v += row.w[i] * h[row.simplex * d1 + i];
    out[j] = v;
  }
}

LossEval CompiledLoss::value_grad_hess(const Eigen::VectorXd& h) const {
  if (h.size() != n_heights_)
    fail(Errc::invalid_argument, "height vector size mismatch");
  const int d1 = complex_->dim() + 1;
  LossEval ev;
  ev.hess.block_size = d1;
  Eigen::VectorXd fx;
  data_values(h, fx);
  const double inv_n = 1.0 / static_cast<double>(n_);

  switch (kind_) {
    case LossKind::ml_density: {
      for (int j = 0; j < n_; ++j)
        if (fx[j] <= 0.0) ev.nonpositive_data.push_back(j);
      if (!ev.nonpositive_data.empty()) {
        ev.finite = false;
        ev.value = std::numeric_limits<double>::infinity();
        ev.push_direction = Eigen::VectorXd::Zero(n_heights_);
        for (int j : ev.nonpositive_data) {
          const auto& row = rows_[j];
          for (int i = 0; i < d1; ++i)
            ev.push_direction[row.simplex * d1 + i] += row.w[i];
        }
        const double nrm = ev.push_direction.norm();
        if (nrm > 0.0) ev.push_direction /= nrm;
        return ev;
      }
      double acc = 0.0;
      ev.grad = Eigen::VectorXd::Zero(n_heights_);
      ev.hess.simplices = touched_;
      ev.hess.blocks.assign(touched_.size(), Eigen::MatrixXd::Zero(d1, d1));
      std::vector<int> block_of(complex_->num_simplices(), -1);
      for (std::size_t b = 0; b < touched_.size(); ++b) block_of[touched_[b]] = static_cast<int>(b);
      for (int j = 0; j < n_; ++j) {
        const auto& row = rows_[j];
        acc += std::log(fx[j]);
        const double gscale = -inv_n / fx[j];
        const double hscale = inv_n / (fx[j] * fx[j]);
        auto& blk = ev.hess.blocks[block_of[row.simplex]];
        for (int i = 0; i < d1; ++i) {
          ev.grad[row.simplex * d1 + i] += gscale * row.w[i];
          for (int jj = 0; jj < d1; ++jj) blk(i, jj) += hscale * row.w[i] * row.w[jj];
        }
      }
      ev.value = -inv_n * acc;
      break;
    }
    case LossKind::ls_density: {
      // (1/n) sum -2 f(x_j) + integral f^2
      ev.grad = Eigen::VectorXd::Zero(n_heights_);
      double lin = 0.0;
      for (int j = 0; j < n_; ++j) {
        const auto& row = rows_[j];
        lin += fx[j];
        for (int i = 0; i < d1; ++i)
          ev.grad[row.simplex * d1 + i] -= 2.0 * inv_n * row.w[i];
      }
      const Eigen::VectorXd Qh = Q_ * h;
      ev.value = -2.0 * inv_n * lin + h.dot(Qh);
      ev.grad += 2.0 * Qh;
      ev.hess.simplices.resize(complex_->num_simplices());
      ev.hess.blocks.resize(complex_->num_simplices());
      const double w0 = 2.0 / (static_cast<double>(d1) * (complex_->dim() + 2));
      for (int k = 0; k < complex_->num_simplices(); ++k) {
        ev.hess.simplices[k] = k;
        Eigen::MatrixXd blk =
            Eigen::MatrixXd::Constant(d1, d1, w0 * complex_->volume(k));
        blk.diagonal() *= 2.0;
        ev.hess.blocks[k] = std::move(blk);
      }
      break;
    }
    case LossKind::ls_regression: {
      ev.grad = Eigen::VectorXd::Zero(n_heights_);
      ev.hess.simplices = touched_;
      ev.hess.blocks.assign(touched_.size(), Eigen::MatrixXd::Zero(d1, d1));
      std::vector<int> block_of(complex_->num_simplices(), -1);
      for (std::size_t b = 0; b < touched_.size(); ++b) block_of[touched_[b]] = static_cast<int>(b);
      double acc = 0.0;
      for (int j = 0; j < n_; ++j) {
        const auto& row = rows_[j];
        const double resid = responses_[j] - fx[j];
        acc += resid * resid;
        auto& blk = ev.hess.blocks[block_of[row.simplex]];
        for (int i = 0; i < d1; ++i) {
          ev.grad[row.simplex * d1 + i] -= 2.0 * inv_n * resid * row.w[i];
          for (int jj = 0; jj < d1; ++jj)
            blk(i, jj) += 2.0 * inv_n * row.w[i] * row.w[jj];
        }
      }
      ev.value = inv_n * acc;
      break;
    }
  }
  return ev;
}

}  // namespace epifit
