#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>

#include "dampc/model.hpp"

namespace dampc {

/// One recorded state transition (x_i, u_i, x_{i+1}).
struct Transition {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd x_next;
};

/// Set-membership identification state: the parameter set
/// Theta_t = {theta | H_theta theta <= h_theta} with fixed normals and a
/// shrinking right-hand side, the regularized Chebyshev point estimate,
/// and the sliding measurement window.
class IdentState {
 public:
  IdentState() = default;
  IdentState(const UncertainModel& model, Eigen::VectorXd theta_bar0, int tau = 10,
             double mu = 1e-3);

  const Eigen::VectorXd& h_theta() const { return h_theta_; }
  const Eigen::VectorXd& theta_bar() const { return theta_bar_; }
  int tau() const { return tau_; }
  double mu() const { return mu_; }
  const std::deque<Transition>& window() const { return window_; }

  /// Current parameter set as a polytope.
  Polytope theta_set() const;

  /// Push a transition, dropping the oldest beyond the window length.
  void record(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& x_next);

  /// Non-falsified set update followed by the point-estimate refresh.
  /// Throws InconsistentData when the data falsifies the model class.
  void step(const UncertainModel& model);

 private:
  const UncertainModel* model_ = nullptr;
  Eigen::VectorXd h_theta_;
  Eigen::VectorXd theta_bar_;
  std::deque<Transition> window_;
  int tau_ = 10;
  double mu_ = 1e-3;
};

/// Regressor split of the dynamics at (x, u):
/// x_next = d_base + D theta + w with D column i = A_i x + B_i u and
/// d_base = A0 x + B0 u.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> regressor(const UncertainModel& model,
                                                      const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& u);

/// Stacked non-falsified halfspaces of the window:
/// -H_w D_i theta <= h_w + H_w (d_base_i - x_{i+1}) for every transition.
/// May be unbounded; only ever intersected with the parameter set.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> nonfalsified_set(const UncertainModel& model,
                                                             const std::deque<Transition>& window);

/// Fixed-complexity set update: one LP per parameter-set row, maximizing
/// that row over Theta_prev intersected with delta. Guarantees the new
/// RHS is componentwise no larger than the old one.
Eigen::VectorXd update_parameter_set(const UncertainModel& model, const Eigen::VectorXd& h_prev,
                                     const Eigen::MatrixXd& H_delta,
                                     const Eigen::VectorXd& h_delta);

/// Regularized Chebyshev estimate:
/// max r_c - mu ||theta_c - prev||^2 s.t. H_i theta_c + r_c ||H_i|| <= h_i.
Eigen::VectorXd estimate_parameter(const UncertainModel& model, const Eigen::VectorXd& h_theta,
                                   const Eigen::VectorXd& prev, double mu);

}  // namespace dampc
