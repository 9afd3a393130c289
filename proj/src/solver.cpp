#include "epifit/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

#include "epifit/kernels.hpp"

namespace epifit {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::epsilon_optimal: return "epsilon_optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatR = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Trip = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;  // keep the smaller index as representative
    else parent[a] = b;
  }
};

struct Soc {
  SpMatR M;
  double bound = 0.0;
  SpMat MtM;                 // reduced columns
  std::vector<int> cols;     // distinct columns touched
};

struct Work {
  int n_heights = 0;
  int n_full = 0;  // heights + penalty aux
  int n = 0;       // reduced
  std::vector<int> rep;
  const CompiledLoss* loss = nullptr;
  Eigen::VectorXd lin_obj;  // reduced
  SpMatR A;
  Eigen::VectorXd b;
  SpMatR G;
  Eigen::VectorXd u;
  std::vector<Soc> socs;
  bool ml = false;
  bool contradiction = false;
  std::string contradiction_msg;
  std::vector<Eigen::VectorXd> candidates;  // reduced-space phase-1 shortcuts

  // scratch for loss evaluation on reduced variables
  mutable Eigen::VectorXd h_full;

  void expand_heights(const Eigen::VectorXd& v, Eigen::VectorXd& h) const {
    h.resize(n_heights);
    for (int i = 0; i < n_heights; ++i) h[i] = v[rep[i]];
  }
};

SpMatR reduce_matrix(const SpMat& M, const std::vector<int>& rep, int n_red) {
  std::vector<Trip> trips;
  trips.reserve(M.nonZeros());
  for (int c = 0; c < M.outerSize(); ++c)
    for (SpMat::InnerIterator it(M, c); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), rep[c], it.value());
  SpMatR out(M.rows(), n_red);
  out.setFromTriplets(trips.begin(), trips.end());
  out.prune(0.0, 1e-300);
  return out;
}

// Drop rows whose entries all canceled (aliased variables); detect
// contradictions they would imply.
void prune_rows(SpMatR& M, Eigen::VectorXd& rhs, std::vector<int>* spec_of_row,
                bool equality, Work& W) {
  std::vector<int> keep;
  const double rhs_scale = rhs.size() ? 1.0 + rhs.cwiseAbs().maxCoeff() : 1.0;
  for (int r = 0; r < M.rows(); ++r) {
    double mx = 0.0;
    for (SpMatR::InnerIterator it(M, r); it; ++it) mx = std::max(mx, std::abs(it.value()));
    if (mx > 1e-14) {
      keep.push_back(r);
      continue;
    }
    if (equality && std::abs(rhs[r]) > 1e-9 * rhs_scale) {
      W.contradiction = true;
      W.contradiction_msg = "contradictory equality rows after presolve";
    }
    if (!equality && rhs[r] < -1e-9 * rhs_scale) {
      W.contradiction = true;
      W.contradiction_msg = "contradictory inequality rows after presolve";
    }
  }
  if (static_cast<int>(keep.size()) == M.rows()) return;
  std::vector<Trip> trips;
  Eigen::VectorXd new_rhs(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (SpMatR::InnerIterator it(M, keep[i]); it; ++it)
      trips.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
    new_rhs[i] = rhs[keep[i]];
  }
  SpMatR out(static_cast<int>(keep.size()), M.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  M.swap(out);
  rhs = std::move(new_rhs);
  if (spec_of_row) {
    std::vector<int> ns;
    ns.reserve(keep.size());
    for (int r : keep) ns.push_back((*spec_of_row)[r]);
    *spec_of_row = std::move(ns);
  }
}

Work build_work(const CompiledLoss* loss, const PenaltyBlock* pen,
                const StandardForm& form) {
  Work W;
  W.n_heights = form.n_vars;
  const int n_aux = pen ? pen->n_aux : 0;
  W.n_full = W.n_heights + n_aux;
  W.loss = loss;
  W.ml = loss && loss->kind() == LossKind::ml_density;

  UnionFind uf(W.n_full);
  for (const auto& [a, b] : form.alias_pairs) uf.unite(a, b);
  for (const auto& grp : form.forced_equal_groups)
    for (std::size_t i = 1; i < grp.size(); ++i) uf.unite(grp[0], grp[i]);

  W.rep.assign(W.n_full, -1);
  int next = 0;
  for (int i = 0; i < W.n_full; ++i) {
    const int r = uf.find(i);
    if (W.rep[r] < 0) W.rep[r] = next++;
    W.rep[i] = W.rep[r];
  }
  W.n = next;

  W.lin_obj = Eigen::VectorXd::Zero(W.n);
  if (pen && pen->n_aux > 0)
    for (int a = 0; a < pen->n_aux; ++a)
      W.lin_obj[W.rep[W.n_heights + a]] += pen->aux_objective[a];

  // equalities
  {
    SpMat Afull(form.A.rows(), W.n_full);
    std::vector<Trip> trips;
    for (int c = 0; c < form.A.outerSize(); ++c)
      for (SpMat::InnerIterator it(form.A, c); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
    Afull.setFromTriplets(trips.begin(), trips.end());
    W.A = reduce_matrix(Afull, W.rep, W.n);
    W.b = form.b;
    prune_rows(W.A, W.b, nullptr, true, W);
  }

  // inequalities: form rows stacked over penalty rows
  {
    const int rows_form = static_cast<int>(form.G.rows());
    const int rows_pen = pen ? static_cast<int>(pen->rows.rows()) : 0;
    SpMat Gfull(rows_form + rows_pen, W.n_full);
    std::vector<Trip> trips;
    for (int c = 0; c < form.G.outerSize(); ++c)
      for (SpMat::InnerIterator it(form.G, c); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
    if (pen)
      for (int c = 0; c < pen->rows.outerSize(); ++c)
        for (SpMat::InnerIterator it(pen->rows, c); it; ++it)
          trips.emplace_back(rows_form + static_cast<int>(it.row()),
                             static_cast<int>(it.col()), it.value());
    Gfull.setFromTriplets(trips.begin(), trips.end());
    W.G = reduce_matrix(Gfull, W.rep, W.n);
    W.u = Eigen::VectorXd::Zero(rows_form + rows_pen);
    W.u.head(rows_form) = form.u;
    prune_rows(W.G, W.u, nullptr, false, W);
  }

  // A flat function solving the equality rows in least squares is strictly
  // feasible for most practical configurations; offer it to phase 1 before
  // the relaxation barrier runs. When argmax groups force a flat maximum,
  // also offer mesa candidates: the flat class raised by beta, the remaining
  // heights lowered just enough to keep the equality rows exact.
  {
    const Eigen::VectorXd arow = W.A * Eigen::VectorXd::Ones(W.n);
    const double arow2 = arow.squaredNorm();
    const double level = arow2 > 0.0 ? arow.dot(W.b) / arow2 : 1.0;
    const double aux_value = 1e3 * (1.0 + std::abs(level));
    std::vector<char> is_aux(W.n, 0);
    for (int a = W.n_heights; a < W.n_full; ++a) is_aux[W.rep[a]] = 1;

    Eigen::VectorXd cand = Eigen::VectorXd::Constant(W.n, level);
    for (int c = 0; c < W.n; ++c)
      if (is_aux[c]) cand[c] = aux_value;
    W.candidates.push_back(cand);

    if (!form.forced_equal_groups.empty()) {
      std::vector<char> in_flat(W.n, 0);
      for (const auto& grp : form.forced_equal_groups)
        for (int full : grp) in_flat[W.rep[full]] = 1;
      Eigen::VectorXd flat_ind = Eigen::VectorXd::Zero(W.n);
      Eigen::VectorXd other_ind = Eigen::VectorXd::Zero(W.n);
      for (int c = 0; c < W.n; ++c) {
        if (is_aux[c]) continue;
        (in_flat[c] ? flat_ind : other_ind)[c] = 1.0;
      }
      const Eigen::VectorXd wf = W.A * flat_ind;
      const Eigen::VectorXd wo = W.A * other_ind;
      const double wo2 = wo.squaredNorm();
      for (double beta : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const double gamma = wo2 > 0.0 ? beta * wf.dot(wo) / wo2 : 0.0;
        Eigen::VectorXd mesa = cand;
        for (int c = 0; c < W.n; ++c) {
          if (is_aux[c]) continue;
          mesa[c] = in_flat[c] ? level * (1.0 + beta) : level * (1.0 - gamma);
        }
        W.candidates.push_back(std::move(mesa));
      }
    }
  }

  for (const auto& blk : form.socs) {
    SpMatR M = reduce_matrix(blk.M, W.rep, W.n);
    double mx = 0.0;
    for (int r = 0; r < M.rows(); ++r)
      for (SpMatR::InnerIterator it(M, r); it; ++it)
        mx = std::max(mx, std::abs(it.value()));
    if (mx <= 1e-14) continue;  // flattened group: gradient vanished identically
    Soc s;
    s.M = std::move(M);
    s.bound = blk.bound;
    SpMat Mc = SpMat(s.M);
    s.MtM = SpMat(Mc.transpose()) * Mc;
    std::vector<char> seen(W.n, 0);
    for (int r = 0; r < s.M.rows(); ++r)
      for (SpMatR::InnerIterator it(s.M, r); it; ++it) seen[it.col()] = 1;
    for (int c = 0; c < W.n; ++c)
      if (seen[c]) s.cols.push_back(c);
    W.socs.push_back(std::move(s));
  }
  return W;
}

// ---------------------------------------------------------------------------
// KKT solve.

class KktSolver {
 public:
  // K = [H A'; A 0] assembled from triplets; solves K x = rhs. A pivoted
  // sparse LU keeps the Newton step accurate at large barrier weights; a
  // regularized LDLT ladder backs it up when the KKT matrix is singular
  // (e.g. dependent equality rows).
  bool factor_and_solve(int n, int m, std::vector<Trip>& h_trips, const SpMatR& A,
                        const Eigen::VectorXd& rhs, Eigen::VectorXd& x,
                        std::string* diag) {
    const int dim = n + m;
    std::vector<Trip> trips = h_trips;
    trips.reserve(h_trips.size() + 2 * A.nonZeros() + dim);
    for (int r = 0; r < A.rows(); ++r)
      for (SpMatR::InnerIterator it(A, r); it; ++it) {
        trips.emplace_back(n + r, static_cast<int>(it.col()), it.value());
        trips.emplace_back(static_cast<int>(it.col()), n + r, it.value());
      }
    SpMat K(dim, dim);
    K.setFromTriplets(trips.begin(), trips.end());
    K.makeCompressed();

    const double rhs_scale = 1.0 + rhs.cwiseAbs().maxCoeff();
    {
      Eigen::SparseLU<SpMat> lu;
      lu.compute(K);
      if (lu.info() == Eigen::Success) {
        x = lu.solve(rhs);
        for (int it = 0; it < 3; ++it) {
          const Eigen::VectorXd resid = rhs - K * x;
          if (resid.cwiseAbs().maxCoeff() <= 1e-12 * rhs_scale) break;
          x += lu.solve(resid);
        }
        if (x.allFinite() &&
            (rhs - K * x).cwiseAbs().maxCoeff() <= 1e-8 * rhs_scale)
          return true;
      }
    }

    double delta = 1e-11;
    for (int attempt = 0; attempt < 6; ++attempt) {
      SpMat Kreg = K;
      std::vector<Trip> reg;
      reg.reserve(dim);
      for (int i = 0; i < n; ++i) reg.emplace_back(i, i, delta);
      for (int i = n; i < dim; ++i) reg.emplace_back(i, i, -delta);
      SpMat D(dim, dim);
      D.setFromTriplets(reg.begin(), reg.end());
      Kreg += D;
      ldlt_.compute(Kreg);
      if (ldlt_.info() != Eigen::Success) {
        delta *= 100.0;
        continue;
      }
      x = ldlt_.solve(rhs);
      for (int it = 0; it < 10; ++it) {
        const Eigen::VectorXd resid = rhs - K * x;
        if (resid.cwiseAbs().maxCoeff() <= 1e-12 * rhs_scale) break;
        x += ldlt_.solve(resid);
      }
      if (x.allFinite()) return true;
      delta *= 100.0;
    }
    if (diag) {
      std::ostringstream os;
      os << "KKT factorization failed (dim " << dim << ", final regularization "
         << delta << ")";
      *diag = os.str();
    }
    return false;
  }

 private:
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

// ---------------------------------------------------------------------------
// Barrier pieces shared by phase 1 and the main solve.

struct BarrierState {
  bool ok = false;
  double psi = kInf;
  double phi = 0.0;  // true objective
  Eigen::VectorXd grad;
  Eigen::VectorXd s;             // inequality slacks
  std::vector<double> m;         // soc margins
  std::vector<Eigen::VectorXd> z;  // soc images
  LossEval loss_ev;
  Eigen::VectorXd fx;  // ml data values
};

bool eval_barrier(const Work& W, const Eigen::VectorXd& v, double t, BarrierState& st) {
  st.ok = false;
  st.phi = W.lin_obj.dot(v);
  if (W.loss) {
    W.expand_heights(v, W.h_full);
    st.loss_ev = W.loss->value_grad_hess(W.h_full);
    if (!st.loss_ev.finite) return false;
    st.phi += st.loss_ev.value;
    if (W.ml) W.loss->data_values(W.h_full, st.fx);
  }
  st.s = W.u - W.G * v;
  if (st.s.size() > 0 && st.s.minCoeff() <= 0.0) return false;
  st.m.resize(W.socs.size());
  st.z.resize(W.socs.size());
  double barrier = 0.0;
  for (std::size_t j = 0; j < W.socs.size(); ++j) {
    st.z[j] = W.socs[j].M * v;
    st.m[j] = W.socs[j].bound * W.socs[j].bound - st.z[j].squaredNorm();
    if (st.m[j] <= 0.0) return false;
    barrier -= std::log(st.m[j]);
  }
  for (Eigen::Index i = 0; i < st.s.size(); ++i) barrier -= std::log(st.s[i]);

  st.psi = t * st.phi + barrier;
  st.grad = Eigen::VectorXd::Zero(v.size());
  if (W.loss) {
    for (int i = 0; i < W.n_heights; ++i) st.grad[W.rep[i]] += st.loss_ev.grad[i];
  }
  st.grad += W.lin_obj;
  st.grad *= t;
  // G' (1/s)
  for (int r = 0; r < W.G.rows(); ++r) {
    const double w = 1.0 / st.s[r];
    for (SpMatR::InnerIterator it(W.G, r); it; ++it) st.grad[it.col()] += w * it.value();
  }
  for (std::size_t j = 0; j < W.socs.size(); ++j) {
    const Eigen::VectorXd Mtz = W.socs[j].M.transpose() * st.z[j];
    const double w = 2.0 / st.m[j];
    st.grad += w * Mtz;
  }
  st.ok = true;
  return true;
}

void hessian_triplets(const Work& W, const BarrierState& st, double t,
                      std::vector<Trip>& trips) {
  trips.clear();
  if (W.loss) {
    std::vector<int> col_of_height(W.n_heights);
    for (int i = 0; i < W.n_heights; ++i) col_of_height[i] = W.rep[i];
    const auto& H = st.loss_ev.hess;
    const int bs = H.block_size;
    for (std::size_t b = 0; b < H.blocks.size(); ++b) {
      const int base = H.simplices[b] * bs;
      for (int i = 0; i < bs; ++i)
        for (int j = 0; j < bs; ++j) {
          const double vv = t * H.blocks[b](i, j);
          if (vv != 0.0)
            trips.emplace_back(col_of_height[base + i], col_of_height[base + j], vv);
        }
    }
  }
  for (int r = 0; r < W.G.rows(); ++r) {
    const double w = 1.0 / (st.s[r] * st.s[r]);
    for (SpMatR::InnerIterator it1(W.G, r); it1; ++it1)
      for (SpMatR::InnerIterator it2(W.G, r); it2; ++it2)
        trips.emplace_back(it1.col(), it2.col(), w * it1.value() * it2.value());
  }
  for (std::size_t j = 0; j < W.socs.size(); ++j) {
    const auto& soc = W.socs[j];
    const double w1 = 2.0 / st.m[j];
    for (int c = 0; c < soc.MtM.outerSize(); ++c)
      for (SpMat::InnerIterator it(soc.MtM, c); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                           w1 * it.value());
    const Eigen::VectorXd Mtz = soc.M.transpose() * st.z[j];
    const double w2 = 4.0 / (st.m[j] * st.m[j]);
    for (int a : soc.cols)
      for (int c : soc.cols)
        trips.emplace_back(a, c, w2 * Mtz[a] * Mtz[c]);
  }
}

// Largest step keeping all strict quantities strictly positive.
double boundary_step(const Work& W, const BarrierState& st, const Eigen::VectorXd& dv) {
  double alpha = kInf;
  if (st.s.size() > 0) {
    const Eigen::VectorXd ds = -(W.G * dv);
    alpha = std::min(alpha, kernels::step_to_boundary(st.s.data(), ds.data(),
                                                      static_cast<std::size_t>(st.s.size())));
  }
  for (std::size_t j = 0; j < W.socs.size(); ++j) {
    const Eigen::VectorXd dz = W.socs[j].M * dv;
    const double a = dz.squaredNorm();
    const double b = 2.0 * st.z[j].dot(dz);
    const double c = st.z[j].squaredNorm() - W.socs[j].bound * W.socs[j].bound;
    if (a > 0.0) {
      const double disc = b * b - 4.0 * a * c;
      if (disc > 0.0) {
        const double root = (-b + std::sqrt(disc)) / (2.0 * a);
        if (root > 0.0) alpha = std::min(alpha, root);
      }
    } else if (b > 0.0) {
      alpha = std::min(alpha, -c / b);
    }
  }
  if (W.ml && st.fx.size() > 0) {
    Eigen::VectorXd dh;
    W.expand_heights(dv, dh);
    Eigen::VectorXd dfx;
    W.loss->data_values(dh, dfx);
    alpha = std::min(alpha, kernels::step_to_boundary(st.fx.data(), dfx.data(),
                                                      static_cast<std::size_t>(st.fx.size())));
  }
  return alpha;
}

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  std::string failure;
};

// Infeasible-start Newton on min_t psi(v) s.t. A v = b.
NewtonOutcome newton_center(const Work& W, double t, Eigen::VectorXd& v,
                            Eigen::VectorXd& nu, const SolverConfig& cfg,
                            int iter_budget, double center_tol = 1e-6) {
  NewtonOutcome out;
  const int m_eq = static_cast<int>(W.A.rows());
  BarrierState st;
  if (!eval_barrier(W, v, t, st)) {
    out.failure = "newton started outside the barrier domain";
    return out;
  }
  KktSolver kkt;
  std::vector<Trip> h_trips;
  for (int it = 0; it < iter_budget; ++it) {
    Eigen::VectorXd r_dual = st.grad;
    if (m_eq > 0) r_dual += W.A.transpose() * nu;
    Eigen::VectorXd r_pri = m_eq > 0 ? Eigen::VectorXd(W.A * v - W.b) : Eigen::VectorXd();
    const double res_pri = m_eq > 0 ? r_pri.cwiseAbs().maxCoeff() : 0.0;
    const double res0 =
        std::sqrt(r_dual.squaredNorm() + (m_eq > 0 ? r_pri.squaredNorm() : 0.0));

    hessian_triplets(W, st, t, h_trips);
    Eigen::VectorXd rhs(W.n + m_eq);
    rhs.head(W.n) = -r_dual;
    if (m_eq > 0) rhs.tail(m_eq) = -r_pri;
    Eigen::VectorXd sol;
    std::string diag;
    if (!kkt.factor_and_solve(W.n, m_eq, h_trips, W.A, rhs, sol, &diag)) {
      out.failure = diag;
      return out;
    }
    const Eigen::VectorXd dv = sol.head(W.n);
    const Eigen::VectorXd dnu = m_eq > 0 ? Eigen::VectorXd(sol.tail(m_eq)) : Eigen::VectorXd();

    // Newton decrement via the assembled Hessian action.
    double lambda2 = 0.0;
    {
      Eigen::VectorXd Hd = Eigen::VectorXd::Zero(W.n);
      for (const auto& tr : h_trips) Hd[tr.row()] += tr.value() * dv[tr.col()];
      lambda2 = dv.dot(Hd);
    }
    const bool primal_ok = res_pri <= 1e-10 * (1.0 + (m_eq > 0 ? W.b.cwiseAbs().maxCoeff() : 0.0));
    if (primal_ok && lambda2 * 0.5 <= center_tol) {
      out.converged = true;
      return out;
    }

    double alpha = std::min(1.0, 0.99 * boundary_step(W, st, dv));
    if (!(alpha > 0.0)) {
      out.failure = "no positive step to the boundary";
      return out;
    }
    bool accepted = false;
    BarrierState trial;
    double res_try = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd v_try = v + alpha * dv;
      if (eval_barrier(W, v_try, t, trial)) {
        Eigen::VectorXd rd = trial.grad;
        Eigen::VectorXd nu_try;
        if (m_eq > 0) {
          nu_try = nu + alpha * dnu;
          rd += W.A.transpose() * nu_try;
        }
        const double rp2 = m_eq > 0 ? (W.A * v_try - W.b).squaredNorm() : 0.0;
        res_try = std::sqrt(rd.squaredNorm() + rp2);
        if (res_try <= (1.0 - cfg.ls_sufficient * alpha) * res0) {
          v = v_try;
          if (m_eq > 0) nu = nu_try;
          st = trial;
          accepted = true;
          break;
        }
      }
      alpha *= cfg.ls_backtrack;
      if (alpha < 1e-14) break;
    }
    ++out.iterations;
    if (std::getenv("EPIFIT_SOLVER_TRACE"))
      std::fprintf(stderr,
                   "  newton t=%.3e it=%d res0=%.3e res=%.3e alpha=%.3e l2=%.3e "
                   "rpri=%.3e acc=%d\n",
                   t, it, res0, res_try, alpha, lambda2, res_pri, (int)accepted);
    if (!accepted) {
      // a stalled line search at a tiny decrement is the numerical floor of
      // this barrier stage, not a failure
      if (primal_ok && lambda2 * 0.5 <= 100.0 * center_tol) {
        out.converged = true;
        return out;
      }
      out.failure = "line search stalled";
      return out;
    }
  }
  out.failure = "newton iteration budget exhausted";
  return out;
}

// ---------------------------------------------------------------------------
// Phase 1: minimize the relaxation level s over the reduced rows.

struct P1Outcome {
  bool feasible = false;
  bool decided = true;
  Eigen::VectorXd v;
  double margin = 0.0;
  double relax_lower_bound = 0.0;
  std::string message;
  int iterations = 0;
};

double min_margin(const Work& W, const Eigen::VectorXd& v) {
  double mg = kInf;
  const Eigen::VectorXd s = W.u - W.G * v;
  if (s.size() > 0) mg = std::min(mg, s.minCoeff());
  for (const auto& soc : W.socs) {
    const double m = soc.bound * soc.bound - (soc.M * v).squaredNorm();
    mg = std::min(mg, m);
  }
  if (W.ml) {
    Eigen::VectorXd h, fx;
    W.expand_heights(v, h);
    W.loss->data_values(h, fx);
    if (fx.size() > 0) mg = std::min(mg, fx.minCoeff());
  }
  return mg;
}

P1Outcome phase1_reduced(const Work& W) {
  P1Outcome out;
  const int n = W.n;
  const int m_eq = static_cast<int>(W.A.rows());

  // Equality-consistent base point; refine away the Tikhonov bias.
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(n);
  bool equalities_consistent = true;
  double eq_residual = 0.0;
  if (m_eq > 0) {
    SpMat At = W.A.transpose();
    SpMat AtA = At * SpMat(W.A);
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, AtA.coeff(i, i));
    const double reg = std::max(1e-14, 1e-12 * scale);
    for (int i = 0; i < n; ++i) AtA.coeffRef(i, i) += reg;
    Eigen::SimplicialLDLT<SpMat> chol(AtA);
    if (chol.info() == Eigen::Success) {
      v0 = chol.solve(At * W.b);
      for (int it = 0; it < 3; ++it) v0 += chol.solve(At * (W.b - W.A * v0));
    }
    eq_residual = (W.A * v0 - W.b).cwiseAbs().maxCoeff();
    equalities_consistent = eq_residual <= 1e-8 * (1.0 + W.b.cwiseAbs().maxCoeff());
  }

  const int n_lin = static_cast<int>(W.G.rows());
  const int n_ml = W.ml ? W.loss->num_data() : 0;
  const int n_soc = static_cast<int>(W.socs.size());
  if (equalities_consistent && n_lin + n_ml + n_soc == 0) {
    out.feasible = true;
    out.v = v0;
    out.margin = kInf;
    out.message = "no inequality structure";
    return out;
  }

  const double b_scale = 1.0 + (m_eq > 0 ? W.b.cwiseAbs().maxCoeff() : 0.0);
  for (const auto& cand : W.candidates) {
    if (m_eq > 0 && (W.A * cand - W.b).cwiseAbs().maxCoeff() > 1e-9 * b_scale)
      continue;
    const double mg = min_margin(W, cand);
    if (mg > 0.0) {
      out.feasible = true;
      out.v = cand;
      out.margin = mg;
      out.message = "strictly feasible (structural candidate)";
      return out;
    }
  }

  if (!equalities_consistent) {
    out.feasible = false;
    out.message =
        "equality system inconsistent (residual " + std::to_string(eq_residual) + ")";
    return out;
  }

  std::vector<double> sigma(n_soc);
  for (int j = 0; j < n_soc; ++j) sigma[j] = 1.0 + W.socs[j].bound * W.socs[j].bound;

  // initial relaxation level
  double viol = 0.0;
  {
    const Eigen::VectorXd gv = W.G * v0;
    for (int r = 0; r < n_lin; ++r) viol = std::max(viol, gv[r] - W.u[r]);
    for (int j = 0; j < n_soc; ++j)
      viol = std::max(viol, ((W.socs[j].M * v0).squaredNorm() -
                             W.socs[j].bound * W.socs[j].bound) /
                                sigma[j]);
    if (W.ml) {
      Eigen::VectorXd h, fx;
      W.expand_heights(v0, h);
      W.loss->data_values(h, fx);
      for (int k = 0; k < n_ml; ++k) viol = std::max(viol, -fx[k]);
    }
  }
  double s = viol * 1.05 + 1.0;
  Eigen::VectorXd v = v0;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(m_eq);
  const double u_scale = 1.0 + (n_lin > 0 ? W.u.cwiseAbs().maxCoeff() : 0.0);
  const double goal = 0.05;
  const int m_count = n_lin + n_ml + 2 * n_soc;
  // center the first stage near the violation scale instead of far above it
  const double t0 = std::max(1.0, static_cast<double>(m_count) / (1.0 + viol));

  // margins and derivatives in the lifted (v, s) space
  auto margins = [&](const Eigen::VectorXd& vv, double ss, Eigen::VectorXd& lin,
                     Eigen::VectorXd& ml, std::vector<double>& soc,
                     std::vector<Eigen::VectorXd>& socz) {
    lin = ss * Eigen::VectorXd::Ones(n_lin) + W.u - W.G * vv;
    soc.resize(n_soc);
    socz.resize(n_soc);
    for (int j = 0; j < n_soc; ++j) {
      socz[j] = W.socs[j].M * vv;
      soc[j] = W.socs[j].bound * W.socs[j].bound + sigma[j] * ss - socz[j].squaredNorm();
    }
    if (W.ml) {
      Eigen::VectorXd h, fx;
      W.expand_heights(vv, h);
      W.loss->data_values(h, fx);
      ml = fx.array() + ss;
    } else {
      ml.resize(0);
    }
    double mn = kInf;
    if (lin.size() > 0) mn = std::min(mn, lin.minCoeff());
    if (ml.size() > 0) mn = std::min(mn, ml.minCoeff());
    for (int j = 0; j < n_soc; ++j) mn = std::min(mn, soc[j]);
    return mn;
  };

  auto eval_psi = [&](const Eigen::VectorXd& vv, double ss, double tt, double* psi) {
    Eigen::VectorXd lin, ml;
    std::vector<double> soc;
    std::vector<Eigen::VectorXd> socz;
    if (margins(vv, ss, lin, ml, soc, socz) <= 0.0) return false;
    double bar = 0.0;
    for (Eigen::Index r = 0; r < lin.size(); ++r) bar -= std::log(lin[r]);
    for (Eigen::Index r = 0; r < ml.size(); ++r) bar -= std::log(ml[r]);
    for (int j = 0; j < n_soc; ++j) bar -= std::log(soc[j]);
    *psi = tt * ss + bar;
    return true;
  };

  KktSolver kkt;
  double t = t0;
  bool stage_converged = false;
  for (int outer = 0; outer < 40; ++outer) {
    stage_converged = false;
    double last_lambda2 = kInf;
    int micro_steps = 0;
    // Newton iterations at this t on variables (v, s).
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd lin, ml;
      std::vector<double> soc;
      std::vector<Eigen::VectorXd> socz;
      const double mn = margins(v, s, lin, ml, soc, socz);
      if (!(mn > 0.0)) {
        out.feasible = false;
        out.decided = false;
        out.message = "phase-1 interior lost";
        return out;
      }

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(n + 1);
      grad[n] = t;
      std::vector<Trip> trips;
      auto add_affine = [&](const std::vector<std::pair<int, double>>& coef, double m) {
        // barrier of an affine margin: grad -= coef/m, hess += coef coef^T / m^2
        for (const auto& [c, w] : coef) grad[c] -= w / m;
        for (const auto& [c1, w1] : coef)
          for (const auto& [c2, w2] : coef)
            trips.emplace_back(c1, c2, w1 * w2 / (m * m));
      };
      std::vector<std::pair<int, double>> coef;
      for (int r = 0; r < n_lin; ++r) {
        coef.clear();
        for (SpMatR::InnerIterator itG(W.G, r); itG; ++itG)
          coef.emplace_back(static_cast<int>(itG.col()), -itG.value());
        coef.emplace_back(n, 1.0);
        add_affine(coef, lin[r]);
      }
      if (W.ml) {
        const auto& rows = W.loss->rows();
        const int d1 = W.loss->complex().dim() + 1;
        for (int k = 0; k < n_ml; ++k) {
          coef.clear();
          for (int i = 0; i < d1; ++i) {
            const int c = W.rep[rows[k].simplex * d1 + i];
            bool merged = false;
            for (auto& [cc, ww] : coef)
              if (cc == c) {
                ww += rows[k].w[i];
                merged = true;
              }
            if (!merged) coef.emplace_back(c, rows[k].w[i]);
          }
          coef.emplace_back(n, 1.0);
          add_affine(coef, ml[k]);
        }
      }
      for (int j = 0; j < n_soc; ++j) {
        // margin m = kappa^2 + sigma s - |Mv|^2
        const Eigen::VectorXd Mtz = W.socs[j].M.transpose() * socz[j];
        const double m = soc[j];
        grad.head(n) += (2.0 / m) * Mtz;
        grad[n] -= sigma[j] / m;
        for (int c = 0; c < W.socs[j].MtM.outerSize(); ++c)
          for (SpMat::InnerIterator itM(W.socs[j].MtM, c); itM; ++itM)
            trips.emplace_back(static_cast<int>(itM.row()), static_cast<int>(itM.col()),
                               (2.0 / m) * itM.value());
        // rank-one of the margin gradient (-2 Mtz, sigma)
        std::vector<std::pair<int, double>> gcoef;
        for (int c : W.socs[j].cols) gcoef.emplace_back(c, -2.0 * Mtz[c]);
        gcoef.emplace_back(n, sigma[j]);
        for (const auto& [c1, w1] : gcoef)
          for (const auto& [c2, w2] : gcoef)
            trips.emplace_back(c1, c2, w1 * w2 / (m * m));
      }

      Eigen::VectorXd r_dual = grad;
      Eigen::VectorXd r_pri;
      if (m_eq > 0) {
        r_dual.head(n) += W.A.transpose() * nu;
        r_pri = W.A * v - W.b;
      }
      const double res0 =
          std::sqrt(r_dual.squaredNorm() + (m_eq > 0 ? r_pri.squaredNorm() : 0.0));

      // lift A with a zero column for s
      SpMatR A_lift(m_eq, n + 1);
      if (m_eq > 0) {
        std::vector<Trip> at;
        for (int r = 0; r < m_eq; ++r)
          for (SpMatR::InnerIterator itA(W.A, r); itA; ++itA)
            at.emplace_back(r, static_cast<int>(itA.col()), itA.value());
        A_lift.setFromTriplets(at.begin(), at.end());
      }
      Eigen::VectorXd rhs(n + 1 + m_eq);
      rhs.head(n + 1) = -r_dual;
      if (m_eq > 0) rhs.tail(m_eq) = -r_pri;
      Eigen::VectorXd sol;
      std::string diag;
      if (!kkt.factor_and_solve(n + 1, m_eq, trips, A_lift, rhs, sol, &diag)) {
        out.feasible = false;
        out.decided = false;
        out.message = "phase-1 " + diag;
        return out;
      }
      const Eigen::VectorXd dv = sol.segment(0, n);
      const double ds = sol[n];
      const Eigen::VectorXd dnu =
          m_eq > 0 ? Eigen::VectorXd(sol.tail(m_eq)) : Eigen::VectorXd();

      double lambda2 = 0.0;
      {
        Eigen::VectorXd full_d(n + 1);
        full_d.head(n) = dv;
        full_d[n] = ds;
        Eigen::VectorXd Hd = Eigen::VectorXd::Zero(n + 1);
        for (const auto& tr : trips) Hd[tr.row()] += tr.value() * full_d[tr.col()];
        lambda2 = full_d.dot(Hd);
      }
      if (!std::isfinite(lambda2) || lambda2 < 0.0) {
        out.feasible = false;
        out.decided = false;
        out.message = "phase-1 numerics broke down";
        return out;
      }
      last_lambda2 = lambda2;
      const bool primal_ok =
          m_eq == 0 || r_pri.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + W.b.cwiseAbs().maxCoeff());
      if (primal_ok && 0.5 * lambda2 <= 1e-9) {
        stage_converged = true;
        break;
      }

      // Armijo on the barrier value (the base point is equality-feasible).
      double psi0 = 0.0;
      eval_psi(v, s, t, &psi0);
      double gdir = grad.head(n).dot(dv) + grad[n] * ds;
      if (gdir > 0.0) gdir = 0.0;
      double alpha = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        const Eigen::VectorXd v_try = v + alpha * dv;
        const double s_try = s + alpha * ds;
        double psi_try = 0.0;
        if (eval_psi(v_try, s_try, t, &psi_try) &&
            psi_try <= psi0 + 1e-4 * alpha * gdir) {
          v = v_try;
          s = s_try;
          if (m_eq > 0) nu += alpha * dnu;
          accepted = true;
          break;
        }
        alpha *= 0.5;
        if (alpha < 1e-14) break;
      }
      ++out.iterations;
      (void)res0;
      if (std::getenv("EPIFIT_SOLVER_TRACE"))
        std::fprintf(stderr,
                     "  phase1 t=%.3e it=%d s=%.6e l2=%.3e acc=%d gdir=%.3e ds=%.3e "
                     "alpha=%.3e\n",
                     t, it, s, lambda2, (int)accepted, gdir, ds, alpha);
      if (!accepted) break;
      micro_steps = alpha < 1e-6 ? micro_steps + 1 : 0;
      if (micro_steps >= 5) break;  // pinned against the relaxation limit
      if (s <= -goal) break;  // comfortably feasible already
    }
    // a stage that ends at a tiny decrement is centered to its numerical
    // floor, whichever exit path it took
    if (0.5 * last_lambda2 <= 1e-5) stage_converged = true;
    // any iterate with s < 0 already certifies strict feasibility; stop
    // before the barrier squeezes the margins to numerical scales
    if (s < 0.0) break;
    const double gap = static_cast<double>(m_count) / t;
    if (gap <= std::max(1e-10, 1e-9 * u_scale)) break;
    if (t > 1e14) break;
    t *= 10.0;
  }

  out.relax_lower_bound = s - static_cast<double>(m_count) / t;
  if (s < 0.0) {
    out.feasible = true;
    out.v = v;
    out.margin = min_margin(W, v);
    out.message = "strictly feasible (relaxation level " + std::to_string(s) + ")";
  } else {
    out.feasible = false;
    // the lower bound is meaningful at a centered point; a numerically
    // stationary relaxation level far above zero also settles the question
    const bool centered_tight =
        stage_converged && out.relax_lower_bound >= -1e-8 * u_scale;
    const bool clear_deficit = out.relax_lower_bound >= 1e-6 * u_scale;
    out.decided = centered_tight || clear_deficit;
    out.message = "infeasible: minimal relaxation level " + std::to_string(s) +
                  " (lower bound " + std::to_string(out.relax_lower_bound) + ")";
    if (!out.decided)
      out.message = "phase 1 could not certify feasibility either way (level " +
                    std::to_string(s) + ", bound " +
                    std::to_string(out.relax_lower_bound) + ")";
  }
  return out;
}

// Stationarity of the barrier KKT system evaluated in extended precision:
// at large barrier weights the active slacks are ~1/t and double-precision
// cancellation in u - Gv dominates the true residual.
double stationarity_residual(const Work& W, const Eigen::VectorXd& v, double t,
                             const Eigen::VectorXd& nu, const BarrierState& st) {
  const int n = W.n;
  std::vector<long double> r(n, 0.0L);
  // t * (loss gradient + linear objective)
  if (W.loss) {
    for (int i = 0; i < W.n_heights; ++i)
      r[W.rep[i]] += static_cast<long double>(st.loss_ev.grad[i]);
  }
  for (int c = 0; c < n; ++c) r[c] += static_cast<long double>(W.lin_obj[c]);
  for (int c = 0; c < n; ++c) r[c] *= static_cast<long double>(t);
  // inequality barrier
  for (int row = 0; row < W.G.rows(); ++row) {
    long double s = static_cast<long double>(W.u[row]);
    for (SpMatR::InnerIterator it(W.G, row); it; ++it)
      s -= static_cast<long double>(it.value()) * static_cast<long double>(v[it.col()]);
    const long double w = 1.0L / s;
    for (SpMatR::InnerIterator it(W.G, row); it; ++it)
      r[it.col()] += w * static_cast<long double>(it.value());
  }
  // cone barrier
  for (const auto& soc : W.socs) {
    const int rows = static_cast<int>(soc.M.rows());
    std::vector<long double> z(rows, 0.0L);
    long double z2 = 0.0L;
    for (int row = 0; row < rows; ++row) {
      for (SpMatR::InnerIterator it(soc.M, row); it; ++it)
        z[row] += static_cast<long double>(it.value()) *
                  static_cast<long double>(v[it.col()]);
      z2 += z[row] * z[row];
    }
    const long double m =
        static_cast<long double>(soc.bound) * static_cast<long double>(soc.bound) - z2;
    const long double w = 2.0L / m;
    for (int row = 0; row < rows; ++row)
      for (SpMatR::InnerIterator it(soc.M, row); it; ++it)
        r[it.col()] += w * z[row] * static_cast<long double>(it.value());
  }
  // equality duals
  for (int row = 0; row < W.A.rows(); ++row)
    for (SpMatR::InnerIterator it(W.A, row); it; ++it)
      r[it.col()] += static_cast<long double>(it.value()) *
                     static_cast<long double>(nu[row]);
  long double worst = 0.0L;
  for (int c = 0; c < n; ++c) worst = std::max(worst, std::abs(r[c]));
  return static_cast<double>(worst / static_cast<long double>(t));
}

double penalty_value_at(const PenaltyBlock* pen,
                        const Eigen::VectorXd& h, const SimplicialComplex& cx) {
  if (!pen || pen->lambda == 0.0) return 0.0;
  const int d1 = cx.dim() + 1;
  double acc = 0.0;
  for (int k = 0; k < cx.num_simplices(); ++k)
    acc += (cx.gradient_map(k) * h.segment(k * d1, d1)).cwiseAbs().sum();
  return pen->lambda * acc;
}

}  // namespace

Phase1Result phase1(const StandardForm& form) {
  CompiledLoss* no_loss = nullptr;
  Work W = build_work(no_loss, nullptr, form);
  Phase1Result res;
  if (W.contradiction) {
    res.feasible = false;
    res.certificate = W.contradiction_msg;
    return res;
  }
  const auto out = phase1_reduced(W);
  res.feasible = out.feasible;
  res.margin = out.margin;
  res.certificate = out.message;
  if (out.feasible) {
    Eigen::VectorXd h;
    W.expand_heights(out.v, h);
    res.point = h;
  }
  return res;
}

std::pair<Eigen::VectorXd, SolveReport> solve(const CompiledLoss& loss,
                                              const PenaltyBlock* penalty,
                                              const StandardForm& form,
                                              const Eigen::VectorXd* warm,
                                              const SolverConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  SolveReport rep;
  if (penalty && penalty->lambda == 0.0) penalty = nullptr;

  Work W = build_work(&loss, penalty, form);
  rep.n_reduced = W.n;
  if (W.contradiction) {
    rep.status = SolveStatus::infeasible;
    rep.message = W.contradiction_msg;
    return {Eigen::VectorXd::Zero(W.n_heights), rep};
  }

  // Starting point: phase 1, optionally blended toward the warm start.
  const auto p1 = phase1_reduced(W);
  rep.phase1_margin = p1.margin;
  rep.iterations += p1.iterations;
  if (!p1.feasible) {
    rep.status = SolveStatus::infeasible;
    rep.message = p1.message;
    if (!p1.decided) fail(Errc::solver_failure, "phase 1 broke down: " + p1.message);
    return {Eigen::VectorXd::Zero(W.n_heights), rep};
  }
  Eigen::VectorXd v = p1.v;
  if (warm) {
    if (warm->size() != W.n_heights)
      fail(Errc::invalid_argument, "warm start size mismatch");
    // average aliased heights into the reduced variables
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(W.n);
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(W.n);
    for (int i = 0; i < W.n_heights; ++i) {
      acc[W.rep[i]] += (*warm)[i];
      cnt[W.rep[i]] += 1.0;
    }
    // penalty aux start above the warm gradients
    if (penalty) {
      Eigen::VectorXd h;
      const auto& cx = loss.complex();
      const int d1 = cx.dim() + 1;
      Eigen::VectorXd warm_h = *warm;
      for (int k = 0; k < cx.num_simplices(); ++k) {
        const Eigen::VectorXd g = cx.gradient_map(k) * warm_h.segment(k * d1, d1);
        for (int j = 0; j < cx.dim(); ++j) {
          const int a = W.rep[W.n_heights + k * cx.dim() + j];
          acc[a] += std::abs(g[j]) + 0.1 * (1.0 + std::abs(g[j]));
          cnt[a] += 1.0;
        }
      }
    }
    Eigen::VectorXd v_warm(W.n);
    for (int c = 0; c < W.n; ++c) v_warm[c] = cnt[c] > 0.0 ? acc[c] / cnt[c] : 0.0;
    for (double tau : {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0}) {
      const Eigen::VectorXd cand = (1.0 - tau) * v_warm + tau * p1.v;
      BarrierState probe;
      if (eval_barrier(W, cand, 1.0, probe)) {
        v = cand;
        break;
      }
    }
  }

  const int m_eff = static_cast<int>(W.G.rows()) + 2 * static_cast<int>(W.socs.size());
  const double gap_target = std::max(cfg.tol_gap, cfg.epsilon_argmin);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(W.A.rows());
  double t = cfg.barrier_init;
  double gap = kInf;
  int main_iters = 0;  // the budget covers the main path, not phase 1

  if (m_eff == 0) {
    const auto out = newton_center(W, 1.0, v, nu, cfg, cfg.max_iters, 1e-10);
    main_iters += out.iterations;
    rep.iterations += out.iterations;
    if (!out.converged && main_iters >= cfg.max_iters) {
      rep.status = SolveStatus::max_iters;
      rep.message = out.failure;
    } else if (!out.converged) {
      fail(Errc::solver_failure, out.failure);
    }
    gap = 0.0;
  } else {
    while (true) {
      const int budget = cfg.max_iters - main_iters;
      if (budget <= 0) {
        rep.status = SolveStatus::max_iters;
        break;
      }
      const bool final_stage = static_cast<double>(m_eff) / t <= 0.9 * gap_target;
      const auto out = newton_center(W, t, v, nu, cfg, budget, final_stage ? 1e-10 : 1e-6);
      main_iters += out.iterations;
      rep.iterations += out.iterations;
      if (!out.converged) {
        if (main_iters >= cfg.max_iters) {
          rep.status = SolveStatus::max_iters;
          rep.message = out.failure;
          break;
        }
        fail(Errc::solver_failure, "newton centering failed: " + out.failure);
      }
      {
        BarrierState probe;
        if (eval_barrier(W, v, t, probe)) rep.outer_objectives.push_back(probe.phi);
      }
      gap = static_cast<double>(m_eff) / t;
      if (gap <= 0.9 * gap_target) break;
      t *= cfg.barrier_scale;
    }
  }

  // Final residual report on the original (reduced) problem; the equality
  // dual is re-fit by least squares to strip accumulated drift.
  BarrierState st;
  eval_barrier(W, v, t, st);
  {
    if (W.A.rows() > 0) {
      SpMat At = W.A.transpose();
      SpMat AAt = SpMat(W.A) * At;
      for (int i = 0; i < AAt.rows(); ++i) AAt.coeffRef(i, i) += 1e-12;
      Eigen::SimplicialLDLT<SpMat> chol(AAt);
      if (chol.info() == Eigen::Success) nu = chol.solve(W.A * (-st.grad));
    }
    rep.kkt.stationarity = stationarity_residual(W, v, t, nu, st);
    rep.kkt.primal = W.A.rows() > 0 ? (W.A * v - W.b).cwiseAbs().maxCoeff() : 0.0;
    rep.kkt.dual = 0.0;  // barrier multipliers are positive by construction
    if (m_eff == 0)
      rep.kkt.gap = 0.0;
    else
      rep.kkt.gap = std::isfinite(gap) ? gap : static_cast<double>(m_eff) / t;
  }
  if (rep.status != SolveStatus::max_iters) {
    rep.status = rep.kkt.gap <= cfg.tol_gap ? SolveStatus::optimal
                                            : SolveStatus::epsilon_optimal;
  }

  Eigen::VectorXd h;
  W.expand_heights(v, h);
  rep.objective = st.phi;
  if (W.loss) {
    // report the true objective with penalty aux clamped to the gradients
    const auto ev = loss.value_grad_hess(h);
    rep.objective = ev.value + penalty_value_at(penalty, h, loss.complex());
  }
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return {h, rep};
}

namespace detail {
Eigen::VectorXd cold_start_heights(const CompiledLoss& loss, const PenaltyBlock* penalty,
                                   const StandardForm& form) {
  if (penalty && penalty->lambda == 0.0) penalty = nullptr;
  Work W = build_work(&loss, penalty, form);
  if (W.contradiction) fail(Errc::infeasible, W.contradiction_msg);
  const auto p1 = phase1_reduced(W);
  if (!p1.feasible) fail(Errc::infeasible, p1.message);
  Eigen::VectorXd h;
  W.expand_heights(p1.v, h);
  return h;
}
}  // namespace detail

}  // namespace epifit
