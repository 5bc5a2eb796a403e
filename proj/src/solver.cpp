#include "dampc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "dampc/errors.hpp"

namespace dampc {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

struct Prepared {
  int n = 0, me = 0, mi = 0;
  SpMat Aeq, Ain, AeqT, AinT;
  VectorXd beq, bin, c, q;
  std::vector<int> nn;  // indices of nonnegative variables
};

Prepared prepare(const ConvexProblem& p) {
  Prepared d;
  d.n = p.num_vars;
  d.me = static_cast<int>(p.b_eq.size());
  d.mi = static_cast<int>(p.b_in.size());
  d.c = p.cost.size() ? p.cost : VectorXd::Zero(d.n);
  d.q = p.quad_diag.size() ? p.quad_diag : VectorXd::Zero(d.n);
  d.Aeq.resize(d.me, d.n);
  d.Ain.resize(d.mi, d.n);
  d.Aeq.setFromTriplets(p.eq_triplets.begin(), p.eq_triplets.end());
  d.Ain.setFromTriplets(p.in_triplets.begin(), p.in_triplets.end());
  d.beq = p.b_eq;
  d.bin = p.b_in;

  // Row equilibration: scale every constraint row to unit inf-norm.
  auto scale_rows = [](SpMat& A, VectorXd& b) {
    VectorXd rmax = VectorXd::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it)
        rmax[it.row()] = std::max(rmax[it.row()], std::abs(it.value()));
    VectorXd inv = VectorXd::Ones(A.rows());
    for (int r = 0; r < A.rows(); ++r)
      if (rmax[r] > 1e-300) inv[r] = 1.0 / std::max(1e-8, std::min(1e8, rmax[r]));
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) it.valueRef() *= inv[it.row()];
    b.array() *= inv.array();
  };
  scale_rows(d.Aeq, d.beq);
  scale_rows(d.Ain, d.bin);
  d.Aeq.makeCompressed();
  d.Ain.makeCompressed();
  d.AeqT = d.Aeq.transpose();
  d.AinT = d.Ain.transpose();
  for (int i = 0; i < d.n; ++i)
    if (i < static_cast<int>(p.nonneg.size()) && p.nonneg[i]) d.nn.push_back(i);
  return d;
}

double violation(const Prepared& d, const VectorXd& x) {
  double v = 0.0;
  if (d.me) v = (d.Aeq * x - d.beq).cwiseAbs().maxCoeff();
  if (d.mi) v = std::max(v, (d.Ain * x - d.bin).maxCoeff());
  for (int i : d.nn) v = std::max(v, -x[i]);
  return std::max(v, 0.0);
}

struct IpmWork {
  // KKT dimension n + me + mi; lower-triangular triplets rebuilt per
  // iteration with a fixed pattern so the symbolic analysis is reused.
  std::vector<Eigen::Triplet<double>> trips;
  SpMat kkt;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;
  bool analyzed = false;
};

bool factor(IpmWork& w, const Prepared& d, const VectorXd& dx_diag, const VectorXd& dz_diag,
            double delta) {
  const int N = d.n + d.me + d.mi;
  w.trips.clear();
  for (int i = 0; i < d.n; ++i) w.trips.emplace_back(i, i, dx_diag[i] + delta);
  for (int k = 0; k < d.Aeq.outerSize(); ++k)
    for (SpMat::InnerIterator it(d.Aeq, k); it; ++it)
      w.trips.emplace_back(d.n + it.row(), it.col(), it.value());
  for (int r = 0; r < d.me; ++r) w.trips.emplace_back(d.n + r, d.n + r, -delta);
  for (int k = 0; k < d.Ain.outerSize(); ++k)
    for (SpMat::InnerIterator it(d.Ain, k); it; ++it)
      w.trips.emplace_back(d.n + d.me + it.row(), it.col(), it.value());
  for (int r = 0; r < d.mi; ++r)
    w.trips.emplace_back(d.n + d.me + r, d.n + d.me + r, -dz_diag[r] - delta);
  w.kkt.resize(N, N);
  w.kkt.setFromTriplets(w.trips.begin(), w.trips.end());
  if (!w.analyzed) {
    w.ldlt.analyzePattern(w.kkt);
    w.analyzed = true;
  }
  w.ldlt.factorize(w.kkt);
  return w.ldlt.info() == Eigen::Success;
}

SolveResult ipm(const Prepared& d, const SolveOptions& opts) {
  const int n = d.n, me = d.me, mi = d.mi;
  const int ncomp = static_cast<int>(d.nn.size()) + mi;
  auto t0 = std::chrono::steady_clock::now();

  VectorXd x = VectorXd::Zero(n);
  for (int i : d.nn) x[i] = 1.0;
  VectorXd s(mi), z(mi), y = VectorXd::Zero(me);
  if (mi) {
    VectorXd r = d.bin - d.Ain * x;
    for (int i = 0; i < mi; ++i) s[i] = std::max(1.0, r[i]);
    z.setOnes();
  }
  VectorXd w = VectorXd::Zero(n);  // duals of x >= 0, nonzero on d.nn only
  for (int i : d.nn) w[i] = 1.0;

  IpmWork work;
  SolveResult res;
  res.status = SolveStatus::IterationLimit;

  const double bnorm = std::max({1.0, me ? d.beq.cwiseAbs().maxCoeff() : 0.0,
                                 mi ? d.bin.cwiseAbs().maxCoeff() : 0.0});
  const double cnorm = std::max(1.0, d.c.cwiseAbs().maxCoeff());

  VectorXd rd(n), rpe(me), rpi(mi);
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    rd = d.q.cwiseProduct(x) + d.c - w;
    if (me) rd += d.AeqT * y;
    if (mi) rd += d.AinT * z;
    if (me) rpe = d.Aeq * x - d.beq;
    if (mi) rpi = d.Ain * x + s - d.bin;

    double mu = 0.0;
    for (int i : d.nn) mu += x[i] * w[i];
    if (mi) mu += s.dot(z);
    if (ncomp) mu /= ncomp;

    const double obj = 0.5 * x.dot(d.q.cwiseProduct(x)) + d.c.dot(x);
    const double rp = std::max(me ? rpe.cwiseAbs().maxCoeff() : 0.0,
                               mi ? rpi.cwiseAbs().maxCoeff() : 0.0);
    const double rdn = rd.cwiseAbs().maxCoeff();
    res.iterations = iter;
    if (rp / bnorm <= opts.feas_tol && rdn / cnorm <= std::max(opts.feas_tol, 1e-9) * 10 &&
        mu <= opts.gap_tol * (1.0 + std::abs(obj))) {
      res.status = SolveStatus::Optimal;
      break;
    }
    const double growth = std::max(x.cwiseAbs().maxCoeff(), std::abs(obj));
    if (growth > 1e10 * bnorm) {
      res.status = (rp <= 1e-5 * growth) ? SolveStatus::Unbounded : SolveStatus::NumericalFailure;
      break;
    }

    VectorXd dx_diag = d.q;
    for (int i : d.nn) dx_diag[i] += w[i] / x[i];
    VectorXd dz_diag(mi);
    for (int i = 0; i < mi; ++i) dz_diag[i] = s[i] / z[i];

    double delta = 1e-9;
    bool ok = false;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt, delta *= 1e3)
      ok = factor(work, d, dx_diag, dz_diag, delta);
    if (!ok) {
      res.status = SolveStatus::NumericalFailure;
      break;
    }

    auto solve_dir = [&](const VectorXd& gx, const VectorXd& gs, VectorXd& dx, VectorXd& dy,
                         VectorXd& dz, VectorXd& ds, VectorXd& dw) {
      // gx: complementarity target for (x,w) pairs; gs: for (s,z) pairs.
      VectorXd rhs(n + me + mi);
      VectorXd top = -rd;
      for (int i : d.nn) top[i] += gx[i] / x[i];
      rhs.head(n) = top;
      if (me) rhs.segment(n, me) = -rpe;
      if (mi) {
        VectorXd bot = -rpi;
        for (int i = 0; i < mi; ++i) bot[i] -= gs[i] / z[i];
        rhs.tail(mi) = bot;
      }
      VectorXd sol = work.ldlt.solve(rhs);
      // one step of iterative refinement
      VectorXd resl = rhs - work.kkt.selfadjointView<Eigen::Lower>() * sol;
      sol += work.ldlt.solve(resl);
      dx = sol.head(n);
      dy = me ? sol.segment(n, me).eval() : VectorXd();
      dz = mi ? sol.tail(mi).eval() : VectorXd();
      dw = VectorXd::Zero(n);
      for (int i : d.nn) dw[i] = (gx[i] - w[i] * dx[i]) / x[i];
      ds.resize(mi);
      for (int i = 0; i < mi; ++i) ds[i] = (gs[i] - s[i] * dz[i]) / z[i];
    };

    auto max_step = [&](const VectorXd& v, const VectorXd& dv, const std::vector<int>* idx) {
      double a = 1.0;
      if (idx) {
        for (int i : *idx)
          if (dv[i] < 0) a = std::min(a, -v[i] / dv[i]);
      } else {
        for (int i = 0; i < v.size(); ++i)
          if (dv[i] < 0) a = std::min(a, -v[i] / dv[i]);
      }
      return a;
    };

    // affine (predictor) direction
    VectorXd gx = VectorXd::Zero(n), gs = VectorXd::Zero(mi);
    for (int i : d.nn) gx[i] = -x[i] * w[i];
    for (int i = 0; i < mi; ++i) gs[i] = -s[i] * z[i];
    VectorXd dx, dy, dz, ds, dw;
    solve_dir(gx, gs, dx, dy, dz, ds, dw);

    double ap = std::min(max_step(x, dx, &d.nn), max_step(s, ds, nullptr));
    double ad = std::min(max_step(w, dw, &d.nn), max_step(z, dz, nullptr));
    double mu_aff = 0.0;
    for (int i : d.nn) mu_aff += (x[i] + ap * dx[i]) * (w[i] + ad * dw[i]);
    for (int i = 0; i < mi; ++i) mu_aff += (s[i] + ap * ds[i]) * (z[i] + ad * dz[i]);
    if (ncomp) mu_aff /= ncomp;
    double sigma = (mu > 0) ? std::pow(mu_aff / mu, 3) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // corrector
    for (int i : d.nn) gx[i] = sigma * mu - x[i] * w[i] - dx[i] * dw[i];
    for (int i = 0; i < mi; ++i) gs[i] = sigma * mu - s[i] * z[i] - ds[i] * dz[i];
    solve_dir(gx, gs, dx, dy, dz, ds, dw);

    const double tau = (mu < 1e-6) ? 0.999 : 0.99;
    ap = tau * std::min(max_step(x, dx, &d.nn), max_step(s, ds, nullptr));
    ad = tau * std::min(max_step(w, dw, &d.nn), max_step(z, dz, nullptr));
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);
    if (ap < 1e-13 && ad < 1e-13) {
      res.status = SolveStatus::NumericalFailure;
      break;
    }

    x += ap * dx;
    if (mi) s += ap * ds;
    if (me) y += ad * dy;
    if (mi) z += ad * dz;
    for (int i : d.nn) w[i] += ad * dw[i];
    for (int i : d.nn) x[i] = std::max(x[i], 1e-300);
  }

  res.x = x;
  res.objective = 0.5 * x.dot(d.q.cwiseProduct(x)) + d.c.dot(x);
  res.max_violation = violation(d, x);
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// Elastic feasibility LP: min t  s.t.  A_in x - t <= b_in, -x_i - t <= 0
// (for flagged i), t >= -1; equalities stay hard. Decides Infeasible vs
// NumericalFailure when the direct solve stalls.
SolveResult phase1(const ConvexProblem& p, const SolveOptions& opts) {
  ConvexProblem q;
  q.resize(p.num_vars + 1);
  const int t = p.num_vars;
  q.cost[t] = 1.0;
  q.eq_triplets = p.eq_triplets;
  q.b_eq = p.b_eq;
  q.in_triplets = p.in_triplets;
  int row = static_cast<int>(p.b_in.size());
  std::vector<double> bin(p.b_in.data(), p.b_in.data() + p.b_in.size());
  for (int r = 0; r < row; ++r) q.in_triplets.emplace_back(r, t, -1.0);
  for (int i = 0; i < p.num_vars; ++i) {
    if (i < static_cast<int>(p.nonneg.size()) && p.nonneg[i]) {
      q.in_triplets.emplace_back(row, i, -1.0);
      q.in_triplets.emplace_back(row, t, -1.0);
      bin.push_back(0.0);
      ++row;
    }
  }
  q.in_triplets.emplace_back(row, t, -1.0);
  bin.push_back(1.0);
  ++row;
  q.b_in = Eigen::Map<VectorXd>(bin.data(), row);
  SolveOptions o = opts;
  o.classify_failures = false;
  return ipm(prepare(q), o);
}

}  // namespace

SolveResult solve_convex(const ConvexProblem& p, const SolveOptions& opts) {
  if (p.num_vars <= 0) throw DimensionMismatch("solve_convex: empty problem");
  Prepared d = prepare(p);
  SolveResult r = ipm(d, opts);
  if (r.status == SolveStatus::Optimal || r.status == SolveStatus::Unbounded) return r;
  if (!opts.classify_failures) return r;
  SolveResult f = phase1(p, opts);
  if (f.status == SolveStatus::Optimal && f.objective > 1e-7) {
    r.status = SolveStatus::Infeasible;
    return r;
  }
  if (f.status == SolveStatus::Optimal) {
    // Certified feasible, so the stall was numerical; retry once with a
    // relaxed gap target and report the best point found.
    SolveOptions o = opts;
    o.max_iters = 2 * opts.max_iters;
    o.gap_tol = std::max(opts.gap_tol, 1e-8);
    o.classify_failures = false;
    SolveResult r2 = ipm(d, o);
    return (r2.status == SolveStatus::Optimal) ? r2 : r;
  }
  return r;
}

}  // namespace dampc
