#include "dampc/identify.hpp"

#include <algorithm>

#include "dampc/errors.hpp"

namespace dampc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

IdentState::IdentState(const UncertainModel& model, VectorXd theta_bar0, int tau, double mu)
    : model_(&model), theta_bar_(std::move(theta_bar0)), tau_(tau), mu_(mu) {
  if (theta_bar_.size() != model.p()) throw DimensionMismatch("IdentState: theta_bar0 size");
  h_theta_ = model.Theta0.h();
  if (tau_ < 1) throw Error("IdentState: tau must be positive");
}

Polytope IdentState::theta_set() const { return Polytope(model_->Theta0.H(), h_theta_); }

void IdentState::record(const VectorXd& x, const VectorXd& u, const VectorXd& x_next) {
  window_.push_back({x, u, x_next});
  while (static_cast<int>(window_.size()) > tau_) window_.pop_front();
}

void IdentState::step(const UncertainModel& model) {
  if (!window_.empty()) {
    auto [Hd, hd] = nonfalsified_set(model, window_);
    h_theta_ = update_parameter_set(model, h_theta_, Hd, hd);
  }
  theta_bar_ = estimate_parameter(model, h_theta_, theta_bar_, mu_);
}

std::pair<MatrixXd, VectorXd> regressor(const UncertainModel& model, const VectorXd& x,
                                        const VectorXd& u) {
  if (x.size() != model.n() || u.size() != model.m())
    throw DimensionMismatch("regressor: state/input size");
  MatrixXd D(model.n(), model.p());
  for (int i = 0; i < model.p(); ++i)
    D.col(i) = model.A_list[i + 1] * x + model.B_list[i + 1] * u;
  VectorXd d_base = model.A_list[0] * x + model.B_list[0] * u;
  return {D, d_base};
}

std::pair<MatrixXd, VectorXd> nonfalsified_set(const UncertainModel& model,
                                               const std::deque<Transition>& window) {
  if (window.empty()) throw Error("nonfalsified_set: empty window");
  const auto& Hw = model.W.H();
  const auto& hw = model.W.h();
  const int nw = static_cast<int>(Hw.rows());
  MatrixXd Hd(nw * window.size(), model.p());
  VectorXd hd(nw * window.size());
  int r = 0;
  for (const auto& tr : window) {
    auto [D, d_base] = regressor(model, tr.x, tr.u);
    Hd.middleRows(r, nw) = -Hw * D;
    hd.segment(r, nw) = hw + Hw * (d_base - tr.x_next);
    r += nw;
  }
  return {Hd, hd};
}

VectorXd update_parameter_set(const UncertainModel& model, const VectorXd& h_prev,
                              const MatrixXd& H_delta, const VectorXd& h_delta) {
  const auto& Ht = model.Theta0.H();
  const int n_theta = static_cast<int>(Ht.rows());
  const int p = model.p();

  ConvexProblem base;
  base.resize(p);
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n_theta; ++i)
    for (int c = 0; c < p; ++c)
      if (Ht(i, c) != 0.0) trips.emplace_back(i, c, Ht(i, c));
  for (int i = 0; i < H_delta.rows(); ++i)
    for (int c = 0; c < p; ++c)
      if (H_delta(i, c) != 0.0) trips.emplace_back(n_theta + i, c, H_delta(i, c));
  base.in_triplets = trips;
  base.b_in.resize(n_theta + H_delta.rows());
  base.b_in << h_prev, h_delta;

  VectorXd h_new(n_theta);
  for (int i = 0; i < n_theta; ++i) {
    ConvexProblem p_i = base;
    p_i.cost = -Ht.row(i).transpose();
    SolveResult r = solve_convex(p_i);
    if (r.status == SolveStatus::Infeasible)
      throw InconsistentData("update_parameter_set: empty intersection, data falsifies model");
    if (r.status != SolveStatus::Optimal)
      throw Error("update_parameter_set: LP failed: " + to_string(r.status));
    // the LP maximum is capped by h_prev through the constraints; clamp
    // residual solver slack so monotonicity is exact
    h_new[i] = std::min(-r.objective, h_prev[i]);
  }
  return h_new;
}

VectorXd estimate_parameter(const UncertainModel& model, const VectorXd& h_theta,
                            const VectorXd& prev, double mu) {
  const auto& Ht = model.Theta0.H();
  const int n_theta = static_cast<int>(Ht.rows());
  const int p = model.p();
  // variables (theta_c, r_c); minimize -r_c + mu ||theta_c - prev||^2
  ConvexProblem qp;
  qp.resize(p + 1);
  qp.quad_diag = VectorXd::Zero(p + 1);
  qp.quad_diag.head(p).setConstant(2.0 * mu);
  qp.cost.head(p) = -2.0 * mu * prev;
  qp.cost[p] = -1.0;
  qp.nonneg[p] = 1;  // r_c >= 0 keeps the estimate inside the set even
                     // when the previous estimate has been cut away
  for (int i = 0; i < n_theta; ++i) {
    for (int c = 0; c < p; ++c)
      if (Ht(i, c) != 0.0) qp.in_triplets.emplace_back(i, c, Ht(i, c));
    qp.in_triplets.emplace_back(i, p, Ht.row(i).norm());
  }
  qp.b_in = h_theta;
  SolveResult r = solve_convex(qp);
  if (r.status == SolveStatus::Infeasible)
    throw InfeasibleSet("estimate_parameter: empty parameter set");
  if (r.status != SolveStatus::Optimal)
    throw Error("estimate_parameter: QP failed: " + to_string(r.status));
  return r.x.head(p);
}

}  // namespace dampc
