#include "dampc/model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "dampc/errors.hpp"

namespace dampc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void UncertainModel::validate() const {
  if (A_list.empty() || B_list.size() != A_list.size())
    throw DimensionMismatch("model: A_list/B_list sizes");
  const int nn = n(), mm = m();
  for (const auto& A : A_list)
    if (A.rows() != nn || A.cols() != nn) throw DimensionMismatch("model: A_i shape");
  for (const auto& B : B_list)
    if (B.rows() != nn || B.cols() != mm) throw DimensionMismatch("model: B_i shape");
  if (C.cols() != nn) throw DimensionMismatch("model: C shape");
  if (Theta0.dim() != p()) throw DimensionMismatch("model: Theta0 dim != p");
  if (W.dim() != nn) throw DimensionMismatch("model: W dim != n");
  if (F.rows() != G.rows() || F.cols() != nn || G.cols() != mm)
    throw DimensionMismatch("model: F/G shape");
  if (Q.rows() != ny() || Q.cols() != ny()) throw DimensionMismatch("model: Q shape");
  if (R.rows() != mm || R.cols() != mm) throw DimensionMismatch("model: R shape");
  Eigen::LLT<MatrixXd> lq(Q), lr(R);
  if (lq.info() != Eigen::Success || lr.info() != Eigen::Success)
    throw Error("model: Q and R must be positive definite");
  if (N_theta < 2) throw Error("model: N_theta must be at least 2");
  if (N < 1 || T < 1 || N_theta > N) throw Error("model: horizon ordering violated");
  if (static_cast<int>(refs.size()) != T + 1) throw DimensionMismatch("model: refs length != T+1");
  for (const auto& r : refs)
    if (r.size() != ny()) throw DimensionMismatch("model: reference dimension");
  // compactness of Z, checked by bounded support in every axis direction
  MatrixXd FG(F.rows(), nn + mm);
  FG << F, G;
  Polytope Z(FG, VectorXd::Ones(F.rows()));  // constructor throws if unbounded
}

std::pair<MatrixXd, MatrixXd> eval_matrices(const UncertainModel& model, const VectorXd& theta) {
  if (theta.size() != model.p()) throw DimensionMismatch("eval_matrices: theta size != p");
  MatrixXd A = model.A_list[0];
  MatrixXd B = model.B_list[0];
  for (int i = 0; i < model.p(); ++i) {
    A += theta[i] * model.A_list[i + 1];
    B += theta[i] * model.B_list[i + 1];
  }
  return {A, B};
}

namespace {

double sigma_min(const MatrixXd& M) {
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues().minCoeff();
}

// rank margins of the setpoint-existence conditions at one parameter
std::pair<double, double> rank_margins(const UncertainModel& model, const VectorXd& theta) {
  auto [A, B] = eval_matrices(model, theta);
  const int n = model.n(), m = model.m(), ny = model.ny(), N = model.N;
  MatrixXd eq(n + ny, n + m);
  eq << A - MatrixXd::Identity(n, n), B, model.C, MatrixXd::Zero(ny, m);
  const double s_eq = sigma_min(eq);

  MatrixXd Ast = MatrixXd::Zero(N * n, N * n);
  for (int i = 0; i < N; ++i) {
    Ast.block(i * n, i * n, n, n) = A;
    if (i + 1 < N) Ast.block(i * n, (i + 1) * n, n, n) = -MatrixXd::Identity(n, n);
  }
  MatrixXd Bst = MatrixXd::Zero(N * n, N * m);
  MatrixXd Cst = MatrixXd::Zero(N * ny, N * n);
  for (int i = 0; i < N; ++i) {
    Bst.block(i * n, i * m, n, m) = B;
    Cst.block(i * ny, i * n, ny, n) = model.C;
  }
  MatrixXd st(N * (n + ny), N * (n + m));
  st << Ast, Bst, Cst, MatrixXd::Zero(N * ny, N * m);
  return {sigma_min(st), s_eq};
}

}  // namespace

RankReport check_rank_assumption(const UncertainModel& model,
                                 const std::vector<VectorXd>& theta_vertices) {
  RankReport rep;
  rep.input_count_ok = model.m() >= model.ny();
  if (!rep.input_count_ok) return rep;

  std::vector<VectorXd> points = theta_vertices;
  auto [c, r] = model.Theta0.chebyshev_ball();
  (void)r;
  points.push_back(c);
  for (const auto& v : theta_vertices) points.push_back(0.5 * (v + c));

  const double thresh = 1e-8;
  double worst = std::numeric_limits<double>::infinity();
  bool st_ok = true, eq_ok = true;
  for (const auto& th : points) {
    auto [s_st, s_eq] = rank_margins(model, th);
    worst = std::min({worst, s_st, s_eq});
    st_ok = st_ok && s_st > thresh;
    eq_ok = eq_ok && s_eq > thresh;
  }
  rep.stacked_rank_ok = st_ok;
  rep.equilibrium_rank_ok = eq_ok;
  rep.worst_sigma_min = worst;
  return rep;
}

std::tuple<VectorXd, VectorXd, double> compute_support_constants(const UncertainModel& model,
                                                                 const MatrixXd& K,
                                                                 const Polytope& X0) {
  const MatrixXd FGK = model.F + model.G * K;
  VectorXd f_bar(FGK.rows());
  for (int i = 0; i < FGK.rows(); ++i) f_bar[i] = X0.support(FGK.row(i).transpose());
  VectorXd w_bar(X0.num_rows());
  for (int j = 0; j < X0.num_rows(); ++j) w_bar[j] = model.W.support(X0.H().row(j).transpose());
  return {f_bar, w_bar, f_bar.maxCoeff()};
}

double TubeDesign::contractivity_slack(const UncertainModel& model) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& th : model.Theta0.vertices()) {
    auto [A, B] = eval_matrices(model, th);
    const MatrixXd HAcl = X0.H() * (A + B * K);
    for (const auto& x : X0.vertices())
      worst = std::max(worst, (HAcl * x).maxCoeff() - lambda_c);
  }
  return worst;
}

namespace {

// Redundancy pruning over rows with h = 1. A cached witness point proves a
// row binding without an LP; redundant rows always cost one LP.
std::vector<int> prune_rows(const MatrixXd& H, std::vector<VectorXd>& witnesses,
                            const Polytope& outer) {
  const int m = static_cast<int>(H.rows());
  const int d = static_cast<int>(H.cols());
  std::vector<char> alive(m, 1);

  for (int i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    const double ni = H.row(i).norm();
    if (ni < 1e-14) {
      alive[i] = 0;
      continue;
    }
    for (int j = 0; j < i; ++j) {
      if (!alive[j]) continue;
      const double nj = H.row(j).norm();
      if ((H.row(i) / ni - H.row(j) / nj).cwiseAbs().maxCoeff() < 1e-11) {
        // parallel rows in h = 1 form: the larger norm is the tighter one
        if (ni <= nj)
          alive[i] = 0;
        else
          alive[j] = 0;
        break;
      }
    }
  }

  for (int i = 0; i < m; ++i)
    if (alive[i] && outer.support(H.row(i).transpose()) <= 1.0 - 1e-9) alive[i] = 0;

  auto row_lp = [&](int i) {
    ConvexProblem p;
    p.resize(d);
    p.cost = -H.row(i).transpose();
    std::vector<double> b;
    int r = 0;
    for (int j = 0; j < m; ++j) {
      if (!alive[j] || j == i) continue;
      for (int c = 0; c < d; ++c)
        if (H(j, c) != 0.0) p.in_triplets.emplace_back(r, c, H(j, c));
      b.push_back(1.0);
      ++r;
    }
    p.b_in = Eigen::Map<VectorXd>(b.data(), r);
    return solve_convex(p);
  };

  for (int i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    bool witnessed = false;
    for (const auto& w : witnesses) {
      if (H.row(i).dot(w) < 1.0 - 1e-7) continue;
      bool feas = true;
      for (int j = 0; j < m && feas; ++j)
        if (alive[j] && j != i && H.row(j).dot(w) > 1.0 + 1e-9) feas = false;
      if (feas) {
        witnessed = true;
        break;
      }
    }
    if (witnessed) continue;
    SolveResult res = row_lp(i);
    if (res.status == SolveStatus::Optimal) {
      if (-res.objective <= 1.0 - 1e-9)
        alive[i] = 0;
      else
        witnesses.push_back(res.x);
    }
    // an unbounded row LP means the other rows do not cap this
    // direction, so the row is essential
  }
  std::vector<int> kept;
  for (int i = 0; i < m; ++i)
    if (alive[i]) kept.push_back(i);
  return kept;
}

}  // namespace

Polytope compute_contractive_set(const std::vector<MatrixXd>& Acl_vertices, double lambda_c,
                                 const Polytope& seed_set, int max_iter) {
  if (lambda_c < 0.0 || lambda_c >= 1.0) throw Error("lambda_c must lie in [0, 1)");
  for (const auto& M : Acl_vertices) {
    Eigen::EigenSolver<MatrixXd> es(M);
    if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0)
      throw Error("compute_contractive_set: a vertex closed loop is not Schur stable");
  }
  Polytope outer = seed_set.normalized();
  MatrixXd H = outer.H();
  std::vector<VectorXd> witnesses;

  for (int it = 0; it < max_iter; ++it) {
    const int m0 = static_cast<int>(H.rows());
    MatrixXd Hs(m0 * (1 + static_cast<int>(Acl_vertices.size())), H.cols());
    Hs.topRows(m0) = H;
    int r = m0;
    for (const auto& M : Acl_vertices) {
      Hs.middleRows(r, m0) = H * M / lambda_c;
      r += m0;
    }
    std::vector<int> kept = prune_rows(Hs, witnesses, outer);
    bool fixed_point = true;
    for (int k : kept)
      if (k >= m0) fixed_point = false;
    MatrixXd Hn(kept.size(), H.cols());
    for (std::size_t i = 0; i < kept.size(); ++i) Hn.row(i) = Hs.row(kept[i]);
    Polytope next(Hn, VectorXd::Ones(Hn.rows()));
    auto [c, rad] = next.chebyshev_ball();
    (void)c;
    if (rad < 1e-9) throw EmptyInterior("compute_contractive_set: set collapsed");
    if (fixed_point) return next.normalized();
    if (static_cast<int>(kept.size()) > 600)
      throw NotConverged("compute_contractive_set: facet count exploded");
    H = Hn;
  }
  throw NotConverged("compute_contractive_set: no fixed point within max_iter");
}

MatrixXd dlqr(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
  MatrixXd P = Q;
  for (int it = 0; it < 100000; ++it) {
    const MatrixXd BtP = B.transpose() * P;
    const MatrixXd Kmat = (R + BtP * B).ldlt().solve(BtP * A);
    const MatrixXd Pn = Q + A.transpose() * P * (A - B * Kmat);
    const double diff = (Pn - P).cwiseAbs().maxCoeff();
    P = 0.5 * (Pn + Pn.transpose());
    if (diff < 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff())) break;
  }
  const MatrixXd BtP = B.transpose() * P;
  return -(R + BtP * B).ldlt().solve(BtP * A);
}

namespace {

// Largest axis box {|x_i| <= c} inside the state projection of Z, via one
// ray LP per box corner (the projection is convex and contains 0).
double state_box_radius(const UncertainModel& model) {
  const int n = model.n(), m = model.m();
  double best = std::numeric_limits<double>::infinity();
  for (long mask = 0; mask < (1L << n); ++mask) {
    VectorXd sigma(n);
    for (int i = 0; i < n; ++i) sigma[i] = (mask >> i) & 1 ? 1.0 : -1.0;
    ConvexProblem p;
    p.resize(1 + m);
    p.cost[0] = -1.0;  // max c
    const VectorXd Fs = model.F * sigma;
    for (int r = 0; r < model.nc(); ++r) {
      if (Fs[r] != 0.0) p.in_triplets.emplace_back(r, 0, Fs[r]);
      for (int c = 0; c < m; ++c)
        if (model.G(r, c) != 0.0) p.in_triplets.emplace_back(r, 1 + c, model.G(r, c));
    }
    p.b_in = VectorXd::Ones(model.nc());
    p.nonneg.assign(1 + m, 0);
    p.nonneg[0] = 1;
    auto res = solve_convex(p);
    if (res.status != SolveStatus::Optimal) throw Error("state_box_radius: LP failed");
    best = std::min(best, -res.objective);
  }
  if (!(best > 1e-9)) throw Error("state_box_radius: Z has empty state interior");
  return best;
}

}  // namespace

TubeDesign offline_design(const UncertainModel& model, const DesignOptions& opts) {
  model.validate();
  TubeDesign d;
  d.lambda_c = opts.lambda_c;

  VectorXd theta_nom = opts.theta_nominal;
  if (theta_nom.size() == 0) theta_nom = model.Theta0.chebyshev_ball().first;
  auto [A_nom, B_nom] = eval_matrices(model, theta_nom);

  if (opts.K_override.size()) {
    d.K = opts.K_override;
  } else {
    const MatrixXd Ql = opts.lqr_Q.size() ? opts.lqr_Q : MatrixXd::Identity(model.n(), model.n());
    const MatrixXd Rl = opts.lqr_R.size() ? opts.lqr_R : MatrixXd::Identity(model.m(), model.m());
    d.K = dlqr(A_nom, B_nom, Ql, Rl);
  }

  std::vector<MatrixXd> Acls;
  for (const auto& th : model.Theta0.vertices()) {
    auto [A, B] = eval_matrices(model, th);
    Acls.push_back(A + B * d.K);
  }

  if (opts.X0_H_override.size()) {
    d.X0 = Polytope(opts.X0_H_override, VectorXd::Ones(opts.X0_H_override.rows())).normalized();
  } else {
    const double c = state_box_radius(model) * opts.seed_scale;
    d.X0 = compute_contractive_set(Acls, opts.lambda_c, Polytope::inf_ball(model.n(), c),
                                   opts.max_iter);
  }
  d.X0.vertices();  // fill the cache once; frozen afterwards

  const double slack = d.contractivity_slack(model);
  if (slack > 1e-8)
    throw RedesignNeeded("offline_design: contractivity certificate failed", slack);

  std::tie(d.f_bar, d.w_bar, d.ff_bar) = compute_support_constants(model, d.K, d.X0);

  const double bound = 1.0 - d.w_bar.maxCoeff() * d.ff_bar;
  if (d.lambda_c > bound + 1e-12)
    throw RedesignNeeded("offline_design: lambda_c exceeds 1 - w_bar*ff_bar", d.lambda_c - bound);
  return d;
}

std::vector<VectorXd> default_reference(int T, const std::vector<VectorXd>& levels) {
  std::vector<VectorXd> refs(T + 1);
  const int holds = static_cast<int>(levels.size());
  const int len = (T + holds) / holds;
  for (int t = 0; t <= T; ++t) refs[t] = levels[std::min(t / len, holds - 1)];
  return refs;
}

UncertainModel build_two_state_model(int T, int N, int N_theta) {
  UncertainModel md;
  MatrixXd A0(2, 2), A1(2, 2), A2 = MatrixXd::Zero(2, 2);
  A0 << 0.85, 0.5, 0.2, 0.7;
  A1 << 0.1, 0, 0, 0.2;
  MatrixXd B0(2, 2), B1 = MatrixXd::Zero(2, 2), B2(2, 2);
  B0 << 1, 0.4, 0.2, 0.6;
  B2 << 0, 0.2, 0, 0.35;
  md.A_list = {A0, A1, A2};
  md.B_list = {B0, B1, B2};
  md.C = MatrixXd::Identity(2, 2);
  md.Theta0 = Polytope::inf_ball(2, 1.0);
  md.W = Polytope::inf_ball(2, 0.1);
  md.F.resize(8, 2);
  md.G.resize(8, 2);
  md.F << MatrixXd::Identity(2, 2) / 3.0, -MatrixXd::Identity(2, 2) / 3.0, MatrixXd::Zero(4, 2);
  md.G << MatrixXd::Zero(4, 2), MatrixXd::Identity(2, 2) / 2.0, -MatrixXd::Identity(2, 2) / 2.0;
  md.Q = 2.0 * MatrixXd::Identity(2, 2);
  md.R = MatrixXd::Identity(2, 2);
  md.T = T;
  md.N = N;
  md.N_theta = N_theta;
  std::vector<VectorXd> levels(5);
  levels[0] = VectorXd::Zero(2);
  levels[1] = (VectorXd(2) << 1.6, 0.8).finished();
  levels[2] = (VectorXd(2) << 0.4, -1.2).finished();
  levels[3] = (VectorXd(2) << -1.2, 0.6).finished();
  levels[4] = (VectorXd(2) << 0.8, 1.4).finished();
  md.refs = default_reference(T, levels);
  return md;
}

UncertainModel build_mass_spring_model(int T, int N, int N_theta) {
  const double k12 = 3.2, k23 = 5.8, c12 = 2.3, c23 = 4.5, Fg = 6.4;
  const double Ts = 0.1;
  auto Ac = [](double k12v, double k23v, double c12v, double c23v) {
    MatrixXd A = MatrixXd::Zero(6, 6);
    A(0, 1) = 1;
    A(1, 0) = -k12v;
    A(1, 1) = -c12v;
    A(1, 2) = k12v;
    A(1, 3) = c12v;
    A(2, 3) = 1;
    A(3, 0) = k12v;
    A(3, 1) = c12v;
    A(3, 2) = -k12v - k23v;
    A(3, 3) = -c12v - c23v;
    A(4, 5) = 1;
    A(5, 2) = k23v;
    A(5, 3) = c23v;
    A(5, 4) = -k23v;
    A(5, 5) = -c23v;
    return A;
  };
  auto Bc = [](double gain) {
    MatrixXd B = MatrixXd::Zero(6, 3);
    B(1, 0) = gain;
    B(3, 1) = gain;
    B(5, 2) = gain;
    return B;
  };
  const MatrixXd zero6 = MatrixXd::Zero(6, 6);
  // partial-derivative structure scaled by uncertainty half-widths, so
  // theta is normalized to [-1, 1]^5
  std::vector<MatrixXd> dA(5, zero6), dB(5, MatrixXd::Zero(6, 3));
  dA[0] = 0.10 * k12 * (Ac(1, 0, 0, 0));
  dA[1] = 0.10 * k23 * (Ac(0, 1, 0, 0));
  dA[2] = 0.05 * c12 * (Ac(0, 0, 1, 0));
  dA[3] = 0.05 * c23 * (Ac(0, 0, 0, 1));
  for (auto& M : dA) {
    M(0, 1) = 0;  // strip the constant integrator entries from partials
    M(2, 3) = 0;
    M(4, 5) = 0;
  }
  dB[4] = 0.07 * Bc(Fg);

  UncertainModel md;
  md.A_list.push_back(MatrixXd::Identity(6, 6) + Ts * Ac(k12, k23, c12, c23));
  md.B_list.push_back(Ts * Bc(Fg));
  for (int i = 0; i < 5; ++i) {
    md.A_list.push_back(Ts * dA[i]);
    md.B_list.push_back(Ts * dB[i]);
  }
  md.C = MatrixXd::Zero(3, 6);
  md.C(0, 0) = 1;
  md.C(1, 2) = 1;
  md.C(2, 4) = 1;
  md.Theta0 = Polytope::inf_ball(5, 1.0);
  md.W = Polytope::inf_ball(6, 0.05);
  md.F.resize(24, 6);
  md.G.resize(24, 3);
  md.F << MatrixXd::Identity(6, 6) / 5.0, -MatrixXd::Identity(6, 6) / 5.0, MatrixXd::Zero(12, 6);
  md.G << MatrixXd::Zero(12, 3), MatrixXd::Identity(3, 3) / 5.0, -MatrixXd::Identity(3, 3) / 5.0;
  md.Q = 2.0 * MatrixXd::Identity(3, 3);
  md.R = MatrixXd::Identity(3, 3);
  md.T = T;
  md.N = N;
  md.N_theta = N_theta;
  std::vector<VectorXd> levels(5);
  levels[0] = VectorXd::Zero(3);
  levels[1] = (VectorXd(3) << 1.0, 0.6, 0.3).finished();
  levels[2] = (VectorXd(3) << 0.4, 1.0, 0.7).finished();
  levels[3] = (VectorXd(3) << -0.5, 0.2, 0.9).finished();
  levels[4] = (VectorXd(3) << 0.6, 0.4, 0.1).finished();
  md.refs = default_reference(T, levels);
  return md;
}

}  // namespace dampc
