#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

namespace dampc {

/// A convex program with linear constraints:
///
///   min  1/2 x' diag(quad_diag) x + cost' x
///   s.t. A_eq x  = b_eq
///        A_in x <= b_in
///        x_i >= 0 for every i with nonneg[i] set
///
/// Equalities are handled natively by the solver. The quadratic term must
/// be diagonal and nonnegative (LP when zero).
struct ConvexProblem {
  int num_vars = 0;
  Eigen::VectorXd cost;
  Eigen::VectorXd quad_diag;  // empty means pure LP
  std::vector<Eigen::Triplet<double>> eq_triplets;
  std::vector<Eigen::Triplet<double>> in_triplets;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd b_in;
  std::vector<char> nonneg;

  void resize(int n) {
    num_vars = n;
    cost = Eigen::VectorXd::Zero(n);
    nonneg.assign(n, 0);
  }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  double wall_time = 0.0;
  /// Worst constraint violation of the returned point, measured post hoc
  /// against the problem data (never trusted from the solver internals).
  double max_violation = 0.0;
};

struct SolveOptions {
  double feas_tol = 1e-9;
  double gap_tol = 1e-9;
  int max_iters = 120;
  /// When the direct solve stalls, a phase-1 LP decides between
  /// Infeasible and NumericalFailure.
  bool classify_failures = true;
};

/// Primal-dual interior-point solve (Mehrotra predictor-corrector) with a
/// sparse quasi-definite KKT factorization.
SolveResult solve_convex(const ConvexProblem& p, const SolveOptions& opts = {});

}  // namespace dampc
