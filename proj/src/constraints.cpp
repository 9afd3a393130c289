#include "epifit/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace epifit {

std::string constraint_name(const ConstraintSpec& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, spec::Nonnegativity>) return "nonnegativity";
        if constexpr (std::is_same_v<T, spec::IntegralEquals>) return "integral_equals";
        if constexpr (std::is_same_v<T, spec::IntegralBand>) return "integral_band";
        if constexpr (std::is_same_v<T, spec::ArgmaxCovers>) return "argmax_covers";
        if constexpr (std::is_same_v<T, spec::LevelSetCovers>) return "level_set_covers";
        if constexpr (std::is_same_v<T, spec::PointwiseBounds>) return "pointwise_bounds";
        if constexpr (std::is_same_v<T, spec::Continuity>) return "continuity";
        if constexpr (std::is_same_v<T, spec::LipschitzBound>) return "lipschitz_bound";
        if constexpr (std::is_same_v<T, spec::Monotone>) return "monotone";
        if constexpr (std::is_same_v<T, spec::Concavity>) return "concavity";
        if constexpr (std::is_same_v<T, spec::MomentBox>) return "moment_box";
        return "unknown";
      },
      s);
}

namespace {

struct Builder {
  const SimplicialComplex& cx;
  int n_vars;
  std::vector<Eigen::Triplet<double>> eq_trips, ineq_trips;
  std::vector<double> eq_rhs, ineq_rhs;
  std::vector<int> eq_spec, ineq_spec;
  std::vector<StandardForm::SocBlock> socs;
  std::vector<std::pair<int, int>> alias_pairs;
  std::vector<std::vector<int>> forced_equal_groups;
  // Supports of all argmax-covered points merge into one class: each covered
  // value dominates every other covered simplex's heights, so all of them
  // coincide at any feasible point.
  std::vector<int> argmax_support;

  int col(int k, int i) const { return k * (cx.dim() + 1) + i; }

  void eq_row(int spec_idx, const std::vector<std::pair<int, double>>& coeffs,
              double rhs) {
    const int r = static_cast<int>(eq_rhs.size());
    for (const auto& [c, v] : coeffs) eq_trips.emplace_back(r, c, v);
    eq_rhs.push_back(rhs);
    eq_spec.push_back(spec_idx);
  }

  void ineq_row(int spec_idx, const std::vector<std::pair<int, double>>& coeffs,
                double rhs) {
    const int r = static_cast<int>(ineq_rhs.size());
    for (const auto& [c, v] : coeffs) ineq_trips.emplace_back(r, c, v);
    ineq_rhs.push_back(rhs);
    ineq_spec.push_back(spec_idx);
  }

  void alias_row(int spec_idx, int ca, int cb) {
    eq_row(spec_idx, {{ca, 1.0}, {cb, -1.0}}, 0.0);
    alias_pairs.emplace_back(ca, cb);
  }

  // Continuity: chain all incidences of each unique vertex.
  void continuity_rows(int spec_idx) {
    for (int v = 0; v < cx.num_vertices(); ++v) {
      const auto& inc = cx.vertex_incidence(v);
      for (std::size_t i = 1; i < inc.size(); ++i)
        alias_row(spec_idx, col(inc[i - 1].first, inc[i - 1].second),
                  col(inc[i].first, inc[i].second));
    }
  }

  void gradient_row(int spec_idx, int k, const Eigen::VectorXd& combo, double rhs) {
    // combo . gradient_k(h) <= rhs
    const Eigen::VectorXd coeffs = cx.gradient_map(k).transpose() * combo;
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i <= cx.dim(); ++i)
      if (coeffs[i] != 0.0) row.emplace_back(col(k, i), coeffs[i]);
    ineq_row(spec_idx, row, rhs);
  }
};

Eigen::VectorXd affine_coords(const SimplicialComplex& cx, int k,
                              const Eigen::VectorXd& x) {
  // Barycentric coordinates w.r.t. simplex k extended affinely (may be
  // negative outside the simplex).
  const int d = cx.dim();
  Eigen::MatrixXd D(d, d);
  const Eigen::VectorXd c0 = cx.simplex_vertex_coords(k, 0);
  for (int i = 0; i < d; ++i) D.col(i) = cx.simplex_vertex_coords(k, i + 1) - c0;
  const Eigen::VectorXd y = D.fullPivLu().solve(x - c0);
  Eigen::VectorXd lam(d + 1);
  lam[0] = 1.0 - y.sum();
  lam.tail(d) = y;
  return lam;
}

}  // namespace

StandardForm assemble(const std::vector<ConstraintSpec>& specs,
                      const SimplicialComplex& cx) {
  const int d = cx.dim();
  const int d1 = d + 1;
  const int N = cx.num_simplices();
  Builder bl{cx, N * d1};

  const Eigen::VectorXd int_coef = integral_coefficients(cx);
  auto integral_coeffs = [&]() {
    std::vector<std::pair<int, double>> row;
    row.reserve(bl.n_vars);
    for (int c = 0; c < bl.n_vars; ++c) row.emplace_back(c, int_coef[c]);
    return row;
  };

  for (std::size_t si = 0; si < specs.size(); ++si) {
    const int s = static_cast<int>(si);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, spec::Nonnegativity>) {
            for (int c = 0; c < bl.n_vars; ++c) bl.ineq_row(s, {{c, -1.0}}, 0.0);
          } else if constexpr (std::is_same_v<T, spec::IntegralEquals>) {
            bl.eq_row(s, integral_coeffs(), v.target);
          } else if constexpr (std::is_same_v<T, spec::IntegralBand>) {
            if (v.delta < 0.0) fail(Errc::invalid_argument, "integral band delta < 0");
            auto row = integral_coeffs();
            bl.ineq_row(s, row, v.target + v.delta);
            for (auto& [c, val] : row) val = -val;
            bl.ineq_row(s, row, -(v.target - v.delta));
          } else if constexpr (std::is_same_v<T, spec::ArgmaxCovers>) {
            for (const auto& x : v.points) {
              if (!cx.box().contains(x, 1e-10))
                fail(Errc::invalid_argument, "argmax point outside the domain box");
              const Location loc = cx.locate(x);
              // value at x = eta . h_{k*} must dominate every tent pole.
              for (int i = 0; i < d1; ++i)
                if (loc.barycentric[i] > 1e-12)
                  bl.argmax_support.push_back(bl.col(loc.simplex, i));
              for (int k = 0; k < N; ++k) {
                for (int i = 0; i < d1; ++i) {
                  std::vector<std::pair<int, double>> row;
                  row.emplace_back(bl.col(k, i), 1.0);
                  for (int j = 0; j < d1; ++j) {
                    const int c = bl.col(loc.simplex, j);
                    const double w = -loc.barycentric[j];
                    if (w == 0.0) continue;
                    bool merged = false;
                    for (auto& [cc, vv] : row)
                      if (cc == c) {
                        vv += w;
                        merged = true;
                        break;
                      }
                    if (!merged) row.emplace_back(c, w);
                  }
                  bl.ineq_row(s, row, 0.0);
                }
              }
            }
          } else if constexpr (std::is_same_v<T, spec::LevelSetCovers>) {
            for (const auto& x : v.points) {
              if (!cx.box().contains(x, 1e-10))
                fail(Errc::invalid_argument, "level-set point outside the domain box");
              const Location loc = cx.locate(x);
              std::vector<std::pair<int, double>> row;
              for (int i = 0; i < d1; ++i)
                row.emplace_back(bl.col(loc.simplex, i), -loc.barycentric[i]);
              bl.ineq_row(s, row, -v.alpha);
            }
          } else if constexpr (std::is_same_v<T, spec::PointwiseBounds>) {
            auto lower_at = [&](int vtx) -> std::optional<double> {
              if (v.lower_per_vertex.size() > 0) {
                if (v.lower_per_vertex.size() != cx.num_vertices())
                  fail(Errc::invalid_argument, "per-vertex lower bound size mismatch");
                return v.lower_per_vertex[vtx];
              }
              return v.lower;
            };
            auto upper_at = [&](int vtx) -> std::optional<double> {
              if (v.upper_per_vertex.size() > 0) {
                if (v.upper_per_vertex.size() != cx.num_vertices())
                  fail(Errc::invalid_argument, "per-vertex upper bound size mismatch");
                return v.upper_per_vertex[vtx];
              }
              return v.upper;
            };
            for (int k = 0; k < N; ++k) {
              for (int i = 0; i < d1; ++i) {
                const int vtx = cx.simplex_vertex(k, i);
                const auto lo = lower_at(vtx);
                const auto up = upper_at(vtx);
                if (lo && up && *lo > *up)
                  fail(Errc::infeasible, "pointwise bounds contradict (lower > upper)");
                if (lo) bl.ineq_row(s, {{bl.col(k, i), -1.0}}, -*lo);
                if (up) bl.ineq_row(s, {{bl.col(k, i), 1.0}}, *up);
              }
            }
          } else if constexpr (std::is_same_v<T, spec::Continuity>) {
            bl.continuity_rows(s);
          } else if constexpr (std::is_same_v<T, spec::LipschitzBound>) {
            if (v.kappa < 0.0) fail(Errc::invalid_argument, "kappa must be >= 0");
            bl.continuity_rows(s);
            if (v.kappa == 0.0) {
              // degenerate bound: every piece gradient vanishes, i.e. the
              // heights of each simplex coincide
              for (int k = 0; k < N; ++k)
                for (int i = 1; i < d1; ++i)
                  bl.alias_row(s, bl.col(k, 0), bl.col(k, i));
              return;
            }
            if (v.norm == GradNorm::euclidean) {
              for (int k = 0; k < N; ++k) {
                Eigen::SparseMatrix<double> M(d, bl.n_vars);
                std::vector<Eigen::Triplet<double>> trips;
                const auto& gm = cx.gradient_map(k);
                for (int r = 0; r < d; ++r)
                  for (int i = 0; i < d1; ++i)
                    if (gm(r, i) != 0.0) trips.emplace_back(r, bl.col(k, i), gm(r, i));
                M.setFromTriplets(trips.begin(), trips.end());
                bl.socs.push_back({std::move(M), v.kappa, s});
              }
            } else if (v.norm == GradNorm::max) {
              for (int k = 0; k < N; ++k)
                for (int j = 0; j < d; ++j) {
                  bl.gradient_row(s, k, Eigen::VectorXd::Unit(d, j), v.kappa);
                  bl.gradient_row(s, k, -Eigen::VectorXd::Unit(d, j), v.kappa);
                }
            } else {  // one-norm: all sign patterns (d <= 3 keeps this small)
              for (int k = 0; k < N; ++k) {
                for (unsigned mask = 0; mask < (1u << d); ++mask) {
                  Eigen::VectorXd sgn(d);
                  for (int j = 0; j < d; ++j) sgn[j] = (mask & (1u << j)) ? -1.0 : 1.0;
                  bl.gradient_row(s, k, sgn, v.kappa);
                }
              }
            }
          } else if constexpr (std::is_same_v<T, spec::Monotone>) {
            if (static_cast<int>(v.direction.size()) != d)
              fail(Errc::invalid_argument, "monotone direction size mismatch");
            bl.continuity_rows(s);
            for (int k = 0; k < N; ++k)
              for (int j = 0; j < d; ++j) {
                if (v.direction[j] == 0) continue;
                // sign * g_j >= 0
                bl.gradient_row(s, k,
                                -static_cast<double>(v.direction[j]) *
                                    Eigen::VectorXd::Unit(d, j),
                                0.0);
              }
          } else if constexpr (std::is_same_v<T, spec::Concavity>) {
            bl.continuity_rows(s);
            for (int k = 0; k < N; ++k) {
              for (int i = 0; i < d1; ++i) {
                const int l = cx.neighbor(k, i);
                if (l < 0) continue;
                // local index of l's vertex opposite the shared facet
                int opp = -1;
                for (int j = 0; j < d1; ++j) {
                  const int vid = cx.simplex_vertex(l, j);
                  bool shared = false;
                  for (int jj = 0; jj < d1; ++jj)
                    if (jj != i && cx.simplex_vertex(k, jj) == vid) shared = true;
                  if (!shared) {
                    opp = j;
                    break;
                  }
                }
                const Eigen::VectorXd lam =
                    affine_coords(cx, k, cx.simplex_vertex_coords(l, opp));
                std::vector<std::pair<int, double>> row;
                row.emplace_back(bl.col(l, opp), 1.0);
                for (int j = 0; j < d1; ++j) {
                  const int c = bl.col(k, j);
                  const double w = -lam[j];
                  bool merged = false;
                  for (auto& [cc, vv] : row)
                    if (cc == c) {
                      vv += w;
                      merged = true;
                      break;
                    }
                  if (!merged && w != 0.0) row.emplace_back(c, w);
                }
                bl.ineq_row(s, row, 0.0);
              }
            }
          } else if constexpr (std::is_same_v<T, spec::MomentBox>) {
            if (v.lower.size() != d || v.upper.size() != d)
              fail(Errc::invalid_argument, "moment box bounds must be d-vectors");
            for (int j = 0; j < d; ++j)
              if (v.lower[j] > v.upper[j])
                fail(Errc::infeasible, "moment box contradicts (lower > upper)");
            const Eigen::MatrixXd M = moment_coefficients(cx);
            for (int j = 0; j < d; ++j) {
              std::vector<std::pair<int, double>> row, neg;
              for (int c = 0; c < bl.n_vars; ++c) {
                if (M(j, c) == 0.0) continue;
                row.emplace_back(c, M(j, c));
                neg.emplace_back(c, -M(j, c));
              }
              bl.ineq_row(s, row, v.upper[j]);
              bl.ineq_row(s, neg, v.lower[j] == 0.0 ? 0.0 : -v.lower[j]);
            }
          }
        },
        specs[si]);
  }

  if (bl.argmax_support.size() > 1) {
    std::sort(bl.argmax_support.begin(), bl.argmax_support.end());
    bl.argmax_support.erase(
        std::unique(bl.argmax_support.begin(), bl.argmax_support.end()),
        bl.argmax_support.end());
    bl.forced_equal_groups.push_back(bl.argmax_support);
  }

  StandardForm form;
  form.n_vars = bl.n_vars;
  form.A.resize(static_cast<int>(bl.eq_rhs.size()), bl.n_vars);
  form.A.setFromTriplets(bl.eq_trips.begin(), bl.eq_trips.end());
  form.b = Eigen::Map<Eigen::VectorXd>(bl.eq_rhs.data(), bl.eq_rhs.size());
  form.G.resize(static_cast<int>(bl.ineq_rhs.size()), bl.n_vars);
  form.G.setFromTriplets(bl.ineq_trips.begin(), bl.ineq_trips.end());
  form.u = Eigen::Map<Eigen::VectorXd>(bl.ineq_rhs.data(), bl.ineq_rhs.size());
  form.socs = std::move(bl.socs);
  form.eq_spec = std::move(bl.eq_spec);
  form.ineq_spec = std::move(bl.ineq_spec);
  form.alias_pairs = std::move(bl.alias_pairs);
  form.forced_equal_groups = std::move(bl.forced_equal_groups);
  return form;
}

PenaltyBlock assemble_penalty(double lambda, const SimplicialComplex& cx) {
  if (lambda < 0.0) fail(Errc::invalid_argument, "penalty lambda must be >= 0");
  PenaltyBlock pb;
  pb.lambda = lambda;
  if (lambda == 0.0) {
    pb.rows.resize(0, cx.num_simplices() * (cx.dim() + 1));
    return pb;
  }
  const int d = cx.dim();
  const int d1 = d + 1;
  const int N = cx.num_simplices();
  const int nh = N * d1;
  pb.n_aux = N * d;
  pb.aux_objective = Eigen::VectorXd::Constant(pb.n_aux, lambda);
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < N; ++k) {
    const auto& gm = cx.gradient_map(k);
    for (int j = 0; j < d; ++j) {
      const int aux = k * d + j;
      const int r0 = 2 * aux, r1 = 2 * aux + 1;
      for (int i = 0; i < d1; ++i) {
        if (gm(j, i) != 0.0) {
          trips.emplace_back(r0, k * d1 + i, gm(j, i));
          trips.emplace_back(r1, k * d1 + i, -gm(j, i));
        }
      }
      trips.emplace_back(r0, nh + aux, -1.0);
      trips.emplace_back(r1, nh + aux, -1.0);
      pb.var_map.push_back("grad_abs[" + std::to_string(k) + "," + std::to_string(j) +
                           "]");
    }
  }
  pb.rows.resize(2 * pb.n_aux, nh + pb.n_aux);
  pb.rows.setFromTriplets(trips.begin(), trips.end());
  return pb;
}

double PenaltyBlock::value(const EpiSpline& f) const {
  if (lambda == 0.0) return 0.0;
  double acc = 0.0;
  for (int k = 0; k < f.complex().num_simplices(); ++k)
    acc += f.piece_gradient(k).cwiseAbs().sum();
  return lambda * acc;
}

SemanticReport check_semantic(const std::vector<ConstraintSpec>& specs,
                              const EpiSpline& f, const SemanticTolerances& tol) {
  SemanticReport rep;
  const auto& cx = f.complex();
  const int d1 = cx.dim() + 1;
  auto fail_check = [&](const std::string& msg) {
    rep.ok = false;
    rep.failures.push_back(msg);
  };

  for (std::size_t si = 0; si < specs.size(); ++si) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          std::ostringstream os;
          if constexpr (std::is_same_v<T, spec::Nonnegativity>) {
            if (f.heights().minCoeff() < -tol.pointwise)
              fail_check("nonnegativity violated");
          } else if constexpr (std::is_same_v<T, spec::IntegralEquals>) {
            const double I = f.integral();
            if (std::abs(I - v.target) > tol.integral) {
              os << "integral " << I << " != " << v.target;
              fail_check(os.str());
            }
          } else if constexpr (std::is_same_v<T, spec::IntegralBand>) {
            const double I = f.integral();
            if (I < v.target - v.delta - tol.integral ||
                I > v.target + v.delta + tol.integral) {
              os << "integral " << I << " outside band " << v.target << "+-" << v.delta;
              fail_check(os.str());
            }
          } else if constexpr (std::is_same_v<T, spec::ArgmaxCovers>) {
            const auto [sup, arg] = f.sup_and_argmax(tol.argmax);
            for (const auto& x : v.points) {
              if (f.evaluate(x) < sup - tol.argmax) {
                os << "argmax does not cover point";
                fail_check(os.str());
                break;
              }
            }
          } else if constexpr (std::is_same_v<T, spec::LevelSetCovers>) {
            for (const auto& x : v.points)
              if (f.evaluate(x) < v.alpha - tol.pointwise) {
                fail_check("level-set coverage violated");
                break;
              }
          } else if constexpr (std::is_same_v<T, spec::PointwiseBounds>) {
            for (int k = 0; k < cx.num_simplices(); ++k)
              for (int i = 0; i < d1; ++i) {
                const int vtx = cx.simplex_vertex(k, i);
                const double h = f.height(k, i);
                double lo = -std::numeric_limits<double>::infinity();
                double up = std::numeric_limits<double>::infinity();
                if (v.lower_per_vertex.size() > 0)
                  lo = v.lower_per_vertex[vtx];
                else if (v.lower)
                  lo = *v.lower;
                if (v.upper_per_vertex.size() > 0)
                  up = v.upper_per_vertex[vtx];
                else if (v.upper)
                  up = *v.upper;
                if (h < lo - tol.pointwise || h > up + tol.pointwise) {
                  fail_check("pointwise bounds violated");
                  return;
                }
              }
          } else if constexpr (std::is_same_v<T, spec::Continuity>) {
            for (int vtx = 0; vtx < cx.num_vertices(); ++vtx) {
              const auto& inc = cx.vertex_incidence(vtx);
              for (std::size_t i = 1; i < inc.size(); ++i)
                if (f.height(inc[i].first, inc[i].second) !=
                    f.height(inc[0].first, inc[0].second)) {
                  fail_check("continuity equalities not exact");
                  return;
                }
            }
          } else if constexpr (std::is_same_v<T, spec::LipschitzBound>) {
            double worst = 0.0;
            for (int k = 0; k < cx.num_simplices(); ++k) {
              const Eigen::VectorXd g = f.piece_gradient(k);
              double nrm = 0.0;
              switch (v.norm) {
                case GradNorm::euclidean: nrm = g.norm(); break;
                case GradNorm::max: nrm = g.cwiseAbs().maxCoeff(); break;
                case GradNorm::one: nrm = g.cwiseAbs().sum(); break;
              }
              worst = std::max(worst, nrm);
            }
            if (worst > v.kappa + tol.gradient) {
              os << "piece gradient norm " << worst << " exceeds " << v.kappa;
              fail_check(os.str());
            }
          } else if constexpr (std::is_same_v<T, spec::Monotone>) {
            for (int k = 0; k < cx.num_simplices(); ++k) {
              const Eigen::VectorXd g = f.piece_gradient(k);
              for (int j = 0; j < cx.dim(); ++j)
                if (v.direction[j] * g[j] < -tol.gradient) {
                  fail_check("monotonicity violated");
                  return;
                }
            }
          } else if constexpr (std::is_same_v<T, spec::Concavity>) {
            std::mt19937_64 rng(tol.seed);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            const auto& box = cx.box();
            Eigen::VectorXd x(cx.dim()), y(cx.dim()), mid(cx.dim());
            for (int trial = 0; trial < tol.concavity_pairs; ++trial) {
              for (int j = 0; j < cx.dim(); ++j) {
                x[j] = box.lower[j] + unif(rng) * (box.upper[j] - box.lower[j]);
                y[j] = box.lower[j] + unif(rng) * (box.upper[j] - box.lower[j]);
              }
              mid = 0.5 * (x + y);
              if (f.evaluate(mid) < 0.5 * (f.evaluate(x) + f.evaluate(y)) - 1e-8) {
                fail_check("concavity midpoint test violated");
                return;
              }
            }
          } else if constexpr (std::is_same_v<T, spec::MomentBox>) {
            const Eigen::VectorXd m = f.first_moment();
            for (int j = 0; j < cx.dim(); ++j)
              if (m[j] < v.lower[j] - tol.integral || m[j] > v.upper[j] + tol.integral) {
                fail_check("moment box violated");
                return;
              }
          }
        },
        specs[si]);
  }
  return rep;
}

}  // namespace epifit
