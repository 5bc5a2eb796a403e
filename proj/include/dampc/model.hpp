#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dampc/polytope.hpp"

namespace dampc {

/// Uncertain plant x+ = A(theta) x + B(theta) u + w with affine parameter
/// dependence A(theta) = A0 + sum_i A_i theta_i (same for B), output
/// y = C x, joint constraint set {F x + G u <= 1}, cost weights and
/// horizons, and the output reference trajectory.
struct UncertainModel {
  std::vector<Eigen::MatrixXd> A_list;  // p+1 matrices, A_list[0] = A0
  std::vector<Eigen::MatrixXd> B_list;
  Eigen::MatrixXd C;
  Polytope Theta0;
  Polytope W;
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::MatrixXd Q;  // n_y x n_y output weight
  Eigen::MatrixXd R;  // m x m input weight
  int T = 0;          // control horizon
  int N = 0;          // prediction horizon
  int N_theta = 2;    // lookahead horizon, >= 2
  std::vector<Eigen::VectorXd> refs;  // T+1 references

  int n() const { return static_cast<int>(A_list.at(0).rows()); }
  int m() const { return static_cast<int>(B_list.at(0).cols()); }
  int p() const { return static_cast<int>(A_list.size()) - 1; }
  int ny() const { return static_cast<int>(C.rows()); }
  int nc() const { return static_cast<int>(F.rows()); }

  /// Throws on any violated structural invariant (dimensions, Q/R
  /// positive definiteness, Z compactness, N_theta >= 2, refs length).
  void validate() const;
};

/// (A(theta), B(theta)) per the affine parameterization.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> eval_matrices(const UncertainModel& model,
                                                          const Eigen::VectorXd& theta);

struct RankReport {
  bool input_count_ok = false;   // m >= n_y
  bool stacked_rank_ok = false;  // rank over the horizon
  bool equilibrium_rank_ok = false;
  double worst_sigma_min = 0.0;  // smallest singular value seen at the tested points
  bool pass() const { return input_count_ok && stacked_rank_ok && equilibrium_rank_ok; }
};

/// Numeric check of the setpoint-existence rank conditions at the
/// Theta0 vertices and a sample of interior points.
RankReport check_rank_assumption(const UncertainModel& model,
                                 const std::vector<Eigen::VectorXd>& theta_vertices);

/// Offline tube design: feedback gain, shape set in normalized form, and
/// the tightening constants.
struct TubeDesign {
  Eigen::MatrixXd K;
  Polytope X0;  // normalized (h = 1), vertices cached
  double lambda_c = 0.0;
  Eigen::VectorXd f_bar;
  Eigen::VectorXd w_bar;
  double ff_bar = 0.0;

  int nx() const { return X0.num_rows(); }
  int q() const { return static_cast<int>(X0.vertices().size()); }

  /// Worst slack of the vertex contractivity certificate
  /// max over (Theta vertex, X0 vertex, facet) of H_x Acl x - lambda_c.
  double contractivity_slack(const UncertainModel& model) const;
};

/// f_bar, w_bar, ff_bar per the tightening definitions: support of X0
/// along rows of F+GK and support of W along rows of H_x.
std::tuple<Eigen::VectorXd, Eigen::VectorXd, double> compute_support_constants(
    const UncertainModel& model, const Eigen::MatrixXd& K, const Polytope& X0);

/// Largest lambda_c-contractive subset of seed_set for the vertex
/// closed-loop matrices, via the backward intersection iteration
/// S+ = S cap {x | H Acl_i x <= lambda_c h} with redundancy pruning.
/// Returns the set in normalized form h = 1.
Polytope compute_contractive_set(const std::vector<Eigen::MatrixXd>& Acl_vertices,
                                 double lambda_c, const Polytope& seed_set, int max_iter = 200);

/// Discrete-time LQR gain for (A, B) with weights (Q, R); u = K x.
Eigen::MatrixXd dlqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

struct DesignOptions {
  double lambda_c = 0.96;
  Eigen::MatrixXd lqr_Q;  // defaults to identity when empty
  Eigen::MatrixXd lqr_R;
  Eigen::VectorXd theta_nominal;  // gain design point; Chebyshev center when empty
  double seed_scale = 1.0;
  // explicit overrides; re-certified, never trusted
  Eigen::MatrixXd K_override;
  Eigen::MatrixXd X0_H_override;
  int max_iter = 200;
};

/// Full offline design: K (LQR or override), X0 (contractive iteration or
/// override), tightening constants, then the contractivity-margin test.
/// Throws RedesignNeeded when the margin test fails.
TubeDesign offline_design(const UncertainModel& model, const DesignOptions& opts);

/// Two-state benchmark model with two uncertain parameters.
UncertainModel build_two_state_model(int T = 100, int N = 8, int N_theta = 8);

/// Triple mass-spring-damper benchmark: 6 states, 3 inputs, 5 normalized
/// parameters, Euler-discretized at 0.1 s.
UncertainModel build_mass_spring_model(int T = 75, int N = 6, int N_theta = 4);

/// Default piecewise-constant reference: five equal holds spanning the
/// output range fractions given in `levels` (reconstruction; real values
/// are configurable).
std::vector<Eigen::VectorXd> default_reference(int T, const std::vector<Eigen::VectorXd>& levels);

}  // namespace dampc
