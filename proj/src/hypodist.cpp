#include "epifit/hypodist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "epifit/kernels.hpp"

namespace epifit {

void HypoDistanceConfig::validate(int space_dim) const {
  if (!(rho_max > 0.0)) fail(Errc::invalid_argument, "rho_max must be > 0");
  if (rho_nodes < 8) fail(Errc::invalid_argument, "rho_nodes must be >= 8");
  if (ball_samples < 64) fail(Errc::invalid_argument, "ball_samples must be >= 64");
  if (center.size() != 0 && center.size() != space_dim)
    fail(Errc::invalid_argument, "hypo-distance center must live in R^{d+1}");
}

HypoDistanceConfig HypoDistanceConfig::defaults_for(const BoxDomain& box) {
  HypoDistanceConfig cfg;
  cfg.center.resize(box.dim() + 1);
  cfg.center.head(box.dim()) = box.centroid();
  cfg.center[box.dim()] = 0.0;
  return cfg;
}

namespace detail {

double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

// Acklam's rational approximation, |error| < 1.2e-9.
double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  p = std::clamp(p, 1e-300, 1.0 - 1e-16);
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  if (p > phigh) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  const double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

BallSamples ball_samples(const HypoDistanceConfig& cfg, int space_dim) {
  static const std::uint64_t bases[] = {2, 3, 5, 7, 11, 13};
  const int dims = space_dim;
  if (dims + 1 > static_cast<int>(sizeof(bases) / sizeof(bases[0])))
    fail(Errc::unsupported_dimension, "ball sampling supports d <= 4");
  BallSamples out;
  out.points.resize(cfg.ball_samples, dims);
  out.radii.resize(cfg.ball_samples);
  out.points.row(0) = cfg.center.transpose();
  out.radii[0] = 0.0;
  Eigen::VectorXd dir(dims);
  for (int s = 1; s < cfg.ball_samples; ++s) {
    const std::uint64_t idx = cfg.seed + static_cast<std::uint64_t>(s);
    if (cfg.norm == BallNorm::euclidean) {
      for (int j = 0; j < dims; ++j) dir[j] = inverse_normal_cdf(halton(idx, bases[j]));
      const double nrm = dir.norm();
      if (nrm < 1e-14) {
        dir.setZero();
        dir[0] = 1.0;
      } else {
        dir /= nrm;
      }
    } else {
      for (int j = 0; j < dims; ++j) dir[j] = 2.0 * halton(idx, bases[j]) - 1.0;
      const double nrm = dir.cwiseAbs().maxCoeff();
      if (nrm < 1e-14) {
        dir.setZero();
        dir[0] = 1.0;
      } else {
        dir /= nrm;
      }
    }
    const double radius = cfg.rho_max * halton(idx, bases[dims]);
    out.points.row(s) = (cfg.center + radius * dir).transpose();
    out.radii[s] = radius;
  }
  return out;
}

HypographDistance::HypographDistance(const EpiSpline& f) : f_(f) {
  const auto& cx = f.complex();
  d_ = cx.dim();
  if (d_ > 3)
    fail(Errc::unsupported_dimension, "hypograph projection supports d <= 3");
  const int N = cx.num_simplices();
  verts_.resize(N);
  grads_.resize(N);
  offsets_.resize(N);
  max_height_.resize(N);
  radii_.resize(N);
  centers_soa_.assign(d_, std::vector<double>(N));
  for (int k = 0; k < N; ++k) {
    Eigen::MatrixXd C(d_, d_ + 1);
    for (int i = 0; i <= d_; ++i) C.col(i) = cx.simplex_vertex_coords(k, i);
    verts_[k] = C;
    grads_[k] = f.piece_gradient(k);
    offsets_[k] = f.piece_offset(k);
    double mh = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= d_; ++i) mh = std::max(mh, f.height(k, i));
    max_height_[k] = mh;
    const Eigen::VectorXd cen = C.rowwise().mean();
    double rad = 0.0;
    for (int i = 0; i <= d_; ++i) rad = std::max(rad, (C.col(i) - cen).norm());
    for (int j = 0; j < d_; ++j) centers_soa_[j][k] = cen[j];
    radii_[k] = rad;
  }
}

namespace {

// min ||y - q||^2 [+ (g.y + b - tau)^2] over the simplex with vertex columns
// C, by enumerating the facial lattice. The minimizer over a face equals the
// affine-hull stationary point whenever that point has nonnegative weights,
// so scanning all faces and keeping feasible candidates is exact.
struct SimplexProjection {
  double value2 = std::numeric_limits<double>::infinity();
  Eigen::VectorXd y;
};

SimplexProjection project_simplex(const Eigen::MatrixXd& C, const Eigen::VectorXd& q,
                                  const Eigen::VectorXd* g, double b, double tau) {
  const int d = static_cast<int>(C.rows());
  const int nv = d + 1;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd r = q;
  if (g) {
    P += (*g) * g->transpose();
    r += (tau - b) * (*g);
  }
  SimplexProjection best;
  for (unsigned mask = 1; mask < (1u << nv); ++mask) {
    int sz = 0;
    int idx[4];
    for (int i = 0; i < nv; ++i)
      if (mask & (1u << i)) idx[sz++] = i;
    Eigen::MatrixXd Cs(d, sz);
    for (int i = 0; i < sz; ++i) Cs.col(i) = C.col(idx[i]);
    Eigen::MatrixXd K(sz + 1, sz + 1);
    K.topLeftCorner(sz, sz) = 2.0 * Cs.transpose() * P * Cs;
    K.topRightCorner(sz, 1).setOnes();
    K.bottomLeftCorner(1, sz).setOnes();
    K(sz, sz) = 0.0;
    Eigen::VectorXd rhs(sz + 1);
    rhs.head(sz) = 2.0 * Cs.transpose() * r;
    rhs[sz] = 1.0;
    const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
    const Eigen::VectorXd lam = sol.head(sz);
    if (lam.minCoeff() < -1e-12) continue;
    const Eigen::VectorXd y = Cs * lam;
    double val = (y - q).squaredNorm();
    if (g) {
      const double beta = g->dot(y) + b;
      val += (beta - tau) * (beta - tau);
    }
    if (val < best.value2) {
      best.value2 = val;
      best.y = y;
    }
  }
  return best;
}

}  // namespace

double HypographDistance::dist(const Eigen::VectorXd& p) const {
  const auto& cx = f_.complex();
  if (p.size() != d_ + 1)
    fail(Errc::invalid_argument, "hypograph distance expects a (d+1)-vector");
  const Eigen::VectorXd q = p.head(d_);
  const double tau = p[d_];

  if (cx.box().contains(q, 0.0) && tau <= f_.evaluate(q)) return 0.0;

  const int N = cx.num_simplices();
  std::vector<double> lb(N);
  const double* centers[3];
  for (int j = 0; j < d_; ++j) centers[j] = centers_soa_[j].data();
  kernels::sphere_lower_bounds(q.data(), centers, radii_.data(),
                               static_cast<std::size_t>(N), d_, lb.data());
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  for (int k = 0; k < N; ++k)
    lb[k] = std::max(lb[k], tau - max_height_[k]);
  std::sort(order.begin(), order.end(),
            [&](int a, int c) { return lb[a] != lb[c] ? lb[a] < lb[c] : a < c; });

  double best = std::numeric_limits<double>::infinity();
  for (int k : order) {
    if (lb[k] >= best) break;
    const auto free = project_simplex(verts_[k], q, nullptr, 0.0, 0.0);
    const double dist_x = std::sqrt(free.value2);
    if (dist_x >= best) continue;  // lifted distance can only be larger
    double dist_k;
    if (grads_[k].dot(free.y) + offsets_[k] >= tau) {
      // (y*, tau) lies in the hypograph of this piece: the height constraint
      // is slack and the x-space projection is the answer.
      dist_k = dist_x;
    } else {
      const auto lifted = project_simplex(verts_[k], q, &grads_[k], offsets_[k], tau);
      dist_k = std::sqrt(lifted.value2);
    }
    best = std::min(best, dist_k);
  }
  return std::isfinite(best) ? best : 0.0;
}

}  // namespace detail

double dist_point_to_hypo(const Eigen::VectorXd& p, const EpiSpline& f) {
  detail::HypographDistance hd(f);
  return hd.dist(p);
}

namespace {

struct PairDistances {
  Eigen::VectorXd diff;   // |dist_f - dist_g| per sample
  Eigen::VectorXd radii;  // sample radii in cfg.norm
  double c0 = 0.0;        // max center-to-hypograph distance
};

PairDistances pair_distances(const EpiSpline& f, const EpiSpline& g,
                             const HypoDistanceConfig& cfg) {
  const int d = f.complex().dim();
  if (g.complex().dim() != d)
    fail(Errc::invalid_argument, "hypo-distance requires splines of equal dimension");
  HypoDistanceConfig c = cfg;
  if (c.center.size() == 0)
    c.center = HypoDistanceConfig::defaults_for(f.complex().box()).center;
  c.validate(d + 1);
  const auto samples = detail::ball_samples(c, d + 1);
  detail::HypographDistance hf(f), hg(g);
  PairDistances out;
  out.diff.resize(samples.points.rows());
  out.radii = samples.radii;
  double df0 = 0.0, dg0 = 0.0;
  for (Eigen::Index s = 0; s < samples.points.rows(); ++s) {
    const Eigen::VectorXd p = samples.points.row(s).transpose();
    const double df = hf.dist(p);
    const double dg = hg.dist(p);
    out.diff[s] = std::abs(df - dg);
    if (s == 0) {
      df0 = df;
      dg0 = dg;
    }
  }
  out.c0 = std::max(df0, dg0);
  return out;
}

double max_within(const PairDistances& pd, double rho) {
  double m = 0.0;
  for (Eigen::Index s = 0; s < pd.diff.size(); ++s)
    if (pd.radii[s] <= rho) m = std::max(m, pd.diff[s]);
  return m;
}

}  // namespace

double dl_rho(const EpiSpline& f, const EpiSpline& g, double rho,
              const HypoDistanceConfig& cfg) {
  if (rho < 0.0) fail(Errc::invalid_argument, "rho must be >= 0");
  const auto pd = pair_distances(f, g, cfg);
  return max_within(pd, rho);
}

DistanceReport dl(const EpiSpline& f, const EpiSpline& g,
                  const HypoDistanceConfig& cfg) {
  HypoDistanceConfig c = cfg;
  if (c.center.size() == 0)
    c.center = HypoDistanceConfig::defaults_for(f.complex().box()).center;
  const auto pd = pair_distances(f, g, c);
  DistanceReport rep;
  rep.dl_rho_curve.reserve(c.rho_nodes);
  const double step = c.rho_max / (c.rho_nodes - 1);
  for (int j = 0; j < c.rho_nodes; ++j) {
    const double rho = j * step;
    rep.dl_rho_curve.emplace_back(rho, max_within(pd, rho));
  }
  double acc = 0.0;
  for (int j = 0; j + 1 < c.rho_nodes; ++j) {
    const auto& [r0, v0] = rep.dl_rho_curve[j];
    const auto& [r1, v1] = rep.dl_rho_curve[j + 1];
    acc += 0.5 * (v0 * std::exp(-r0) + v1 * std::exp(-r1)) * (r1 - r0);
  }
  rep.dl_value = acc;
  rep.truncation_bound = std::exp(-c.rho_max) * (pd.c0 + c.rho_max + 1.0);
  const int dims = f.complex().dim() + 1;
  rep.resolution_estimate =
      2.0 * c.rho_max * std::pow(1.0 / c.ball_samples, 1.0 / dims);
  return rep;
}

}  // namespace epifit
