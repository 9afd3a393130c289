#include "epifit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace epifit {

namespace {

constexpr double kFacetTol = 1e-10;    // barycentric snap width
constexpr double kDomainTol = 1e-10;   // out-of-domain slack

std::int64_t factorial(int d) {
  std::int64_t f = 1;
  for (int i = 2; i <= d; ++i) f *= i;
  return f;
}

}  // namespace

double BoxDomain::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= upper[i] - lower[i];
  return v;
}

bool BoxDomain::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return true;
}

void BoxDomain::validate() const {
  if (lower.size() < 1 || lower.size() != upper.size())
    fail(Errc::invalid_argument, "box needs matching lower/upper of dimension >= 1");
  for (int i = 0; i < dim(); ++i) {
    if (!(lower[i] < upper[i]))
      fail(Errc::invalid_argument, "box requires lower < upper in every coordinate");
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      fail(Errc::invalid_argument, "box bounds must be finite");
  }
}

double simplex_volume(const Eigen::MatrixXd& vertex_coords) {
  const int d = static_cast<int>(vertex_coords.cols());
  if (vertex_coords.rows() != d + 1)
    fail(Errc::invalid_argument, "simplex_volume expects d+1 points of dimension d");
  Eigen::MatrixXd edges(d, d);
  for (int i = 0; i < d; ++i)
    edges.col(i) = (vertex_coords.row(i + 1) - vertex_coords.row(0)).transpose();
  return std::abs(edges.determinant()) / static_cast<double>(factorial(d));
}

std::int64_t SimplicialComplex::cell_linear(const std::vector<int>& c) const {
  std::int64_t lin = 0;
  for (int i = dim_ - 1; i >= 0; --i) lin = lin * cells_[i] + c[i];
  return lin;
}

std::int64_t SimplicialComplex::vertex_linear(const std::vector<int>& c) const {
  std::int64_t lin = 0;
  for (int i = dim_ - 1; i >= 0; --i) lin = lin * (cells_[i] + 1) + c[i];
  return lin;
}

std::shared_ptr<const SimplicialComplex> SimplicialComplex::kuhn(
    const BoxDomain& box, const std::vector<int>& cells_per_dim,
    std::int64_t simplex_cap) {
  box.validate();
  const int d = box.dim();
  if (static_cast<int>(cells_per_dim.size()) != d)
    fail(Errc::invalid_argument, "cells_per_dim size must equal the box dimension");
  for (int m : cells_per_dim)
    if (m < 1) fail(Errc::invalid_argument, "cells_per_dim entries must be >= 1");

  std::int64_t n_cells = 1;
  for (int m : cells_per_dim) {
    n_cells *= m;
    if (n_cells > simplex_cap)
      fail(Errc::infeasible_partition, "requested partition exceeds the simplex cap");
  }
  const std::int64_t dfact = factorial(d);
  if (n_cells * dfact > simplex_cap)
    fail(Errc::infeasible_partition, "requested partition exceeds the simplex cap");

  auto cx = std::shared_ptr<SimplicialComplex>(new SimplicialComplex());
  cx->dim_ = d;
  cx->box_ = box;
  cx->cells_ = cells_per_dim;
  cx->cell_width_.resize(d);
  for (int i = 0; i < d; ++i)
    cx->cell_width_[i] = (box.upper[i] - box.lower[i]) / cells_per_dim[i];

  // Grid vertices; each node computed once so coincident simplex corners are
  // exactly equal and deduplication is by construction.
  std::int64_t n_vertices = 1;
  for (int m : cells_per_dim) n_vertices *= m + 1;
  cx->vertices_.resize(n_vertices, d);
  {
    std::vector<int> node(d, 0);
    for (std::int64_t v = 0; v < n_vertices; ++v) {
      for (int i = 0; i < d; ++i)
        cx->vertices_(v, i) = box.lower[i] + node[i] * cx->cell_width_[i];
      for (int i = 0; i < d; ++i) {
        if (++node[i] <= cells_per_dim[i]) break;
        node[i] = 0;
      }
    }
  }

  // Lexicographic permutations define the simplex order inside each cell.
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  cx->perms_.clear();
  do {
    cx->perms_.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  const std::int64_t n_simplices = n_cells * dfact;
  cx->simplices_.resize(n_simplices, d + 1);
  double cell_volume = 1.0;
  for (int i = 0; i < d; ++i) cell_volume *= cx->cell_width_[i];
  cx->volumes_ = Eigen::VectorXd::Constant(n_simplices, cell_volume / dfact);

  std::vector<int> cell(d, 0);
  for (std::int64_t c = 0; c < n_cells; ++c) {
    for (std::int64_t p = 0; p < dfact; ++p) {
      const std::int64_t k = c * dfact + p;
      std::vector<int> node = cell;
      cx->simplices_(k, 0) = static_cast<int>(cx->vertex_linear(node));
      for (int j = 0; j < d; ++j) {
        node[cx->perms_[p][j]] += 1;
        cx->simplices_(k, j + 1) = static_cast<int>(cx->vertex_linear(node));
      }
    }
    for (int i = 0; i < d; ++i) {
      if (++cell[i] < cells_per_dim[i]) break;
      cell[i] = 0;
    }
  }

  // Facet adjacency: match sorted facet keys.
  cx->adjacency_ = Eigen::MatrixXi::Constant(n_simplices, d + 1, -1);
  {
    std::map<std::vector<int>, std::pair<int, int>> open_facets;
    std::vector<int> key(d);
    for (std::int64_t k = 0; k < n_simplices; ++k) {
      for (int i = 0; i <= d; ++i) {
        int pos = 0;
        for (int j = 0; j <= d; ++j)
          if (j != i) key[pos++] = cx->simplices_(k, j);
        std::sort(key.begin(), key.end());
        auto it = open_facets.find(key);
        if (it == open_facets.end()) {
          open_facets.emplace(key, std::make_pair(static_cast<int>(k), i));
        } else {
          cx->adjacency_(k, i) = it->second.first;
          cx->adjacency_(it->second.first, it->second.second) = static_cast<int>(k);
          open_facets.erase(it);
        }
      }
    }
  }

  // Per-simplex gradient maps: g = D^{-T} * [ -1 I ] applied to heights.
  cx->gradient_maps_.resize(n_simplices);
  Eigen::MatrixXd edges(d, d);
  for (std::int64_t k = 0; k < n_simplices; ++k) {
    for (int i = 0; i < d; ++i)
      edges.col(i) = (cx->vertices_.row(cx->simplices_(k, i + 1)) -
                      cx->vertices_.row(cx->simplices_(k, 0)))
                         .transpose();
    Eigen::MatrixXd inv_t = edges.transpose().fullPivLu().inverse();
    Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(d, d + 1);
    diff.col(0).setConstant(-1.0);
    diff.block(0, 1, d, d).setIdentity();
    cx->gradient_maps_[k] = inv_t * diff;
  }

  cx->incidence_.assign(n_vertices, {});
  for (std::int64_t k = 0; k < n_simplices; ++k)
    for (int i = 0; i <= d; ++i)
      cx->incidence_[cx->simplices_(k, i)].emplace_back(static_cast<int>(k), i);

  return cx;
}

Location SimplicialComplex::locate(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) fail(Errc::invalid_argument, "locate: dimension mismatch");
  if (!box_.contains(x, kDomainTol))
    fail(Errc::out_of_domain, "locate: point outside the domain box");

  std::vector<int> cell(dim_);
  std::vector<double> t(dim_);
  for (int i = 0; i < dim_; ++i) {
    const double s = (x[i] - box_.lower[i]) / cell_width_[i];
    int c = static_cast<int>(std::floor(s));
    c = std::clamp(c, 0, cells_[i] - 1);
    double ti = s - c;
    if (ti <= kFacetTol) {
      if (c > 0) {  // shared grid plane: prefer the lower cell
        c -= 1;
        ti = 1.0;
      } else {
        ti = std::max(ti, 0.0);
      }
    } else if (ti >= 1.0 - kFacetTol) {
      ti = 1.0;
    }
    cell[i] = c;
    t[i] = ti;
  }

  const std::int64_t base = cell_linear(cell) * static_cast<std::int64_t>(perms_.size());
  Location loc;
  loc.barycentric.resize(dim_ + 1);
  for (std::size_t p = 0; p < perms_.size(); ++p) {
    const auto& sig = perms_[p];
    double mn = 0.0;
    loc.barycentric[0] = 1.0 - t[sig[0]];
    for (int j = 1; j < dim_; ++j) loc.barycentric[j] = t[sig[j - 1]] - t[sig[j]];
    loc.barycentric[dim_] = t[sig[dim_ - 1]];
    mn = loc.barycentric.minCoeff();
    if (mn >= -kFacetTol) {
      for (int j = 0; j <= dim_; ++j)
        if (loc.barycentric[j] < 0.0) loc.barycentric[j] = 0.0;
      loc.simplex = static_cast<int>(base + static_cast<std::int64_t>(p));
      return loc;
    }
  }
  fail(Errc::degenerate_geometry, "locate: no containing simplex found");
}

std::vector<Location> SimplicialComplex::locate_all(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) fail(Errc::invalid_argument, "locate_all: dimension mismatch");
  if (!box_.contains(x, kDomainTol))
    fail(Errc::out_of_domain, "locate_all: point outside the domain box");

  // Candidate cells per dimension (at most two when x sits on a grid plane).
  std::vector<std::vector<std::pair<int, double>>> cands(dim_);
  for (int i = 0; i < dim_; ++i) {
    const double s = (x[i] - box_.lower[i]) / cell_width_[i];
    int c = static_cast<int>(std::floor(s));
    c = std::clamp(c, 0, cells_[i] - 1);
    const double ti = std::clamp(s - c, 0.0, 1.0);
    cands[i].push_back({c, ti});
    if (ti <= kFacetTol && c > 0) cands[i].push_back({c - 1, 1.0});
    if (ti >= 1.0 - kFacetTol && c + 1 <= cells_[i] - 1) cands[i].push_back({c + 1, 0.0});
  }

  std::vector<Location> found;
  std::vector<int> pick(dim_, 0);
  std::vector<int> cell(dim_);
  std::vector<double> t(dim_);
  while (true) {
    for (int i = 0; i < dim_; ++i) {
      cell[i] = cands[i][pick[i]].first;
      t[i] = cands[i][pick[i]].second;
    }
    const std::int64_t base =
        cell_linear(cell) * static_cast<std::int64_t>(perms_.size());
    for (std::size_t p = 0; p < perms_.size(); ++p) {
      const auto& sig = perms_[p];
      Eigen::VectorXd mu(dim_ + 1);
      mu[0] = 1.0 - t[sig[0]];
      for (int j = 1; j < dim_; ++j) mu[j] = t[sig[j - 1]] - t[sig[j]];
      mu[dim_] = t[sig[dim_ - 1]];
      if (mu.minCoeff() >= -kFacetTol) {
        Location loc;
        loc.simplex = static_cast<int>(base + static_cast<std::int64_t>(p));
        loc.barycentric = mu.cwiseMax(0.0);
        found.push_back(std::move(loc));
      }
    }
    int i = 0;
    for (; i < dim_; ++i) {
      if (++pick[i] < static_cast<int>(cands[i].size())) break;
      pick[i] = 0;
    }
    if (i == dim_) break;
  }
  return found;
}

bool SimplicialComplex::same_grid(const SimplicialComplex& other) const {
  return dim_ == other.dim_ && cells_ == other.cells_ &&
         box_.lower == other.box_.lower && box_.upper == other.box_.upper;
}

}  // namespace epifit
