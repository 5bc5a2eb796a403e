#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "dampc/solver.hpp"

using namespace dampc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("bounded scalar LP: min x s.t. x >= 3") {
  ConvexProblem p;
  p.resize(1);
  p.cost[0] = 1.0;
  p.in_triplets.emplace_back(0, 0, -1.0);
  p.b_in = VectorXd::Constant(1, -3.0);
  auto r = solve_convex(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(r.max_violation <= 1e-7);
}

TEST_CASE("equalities handled natively") {
  // min x+y s.t. x+y+z = 2, z = 1, x,y >= 0
  ConvexProblem p;
  p.resize(3);
  p.cost << 1, 1, 0;
  p.eq_triplets = {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}};
  p.b_eq = VectorXd(2);
  p.b_eq << 2, 1;
  p.nonneg = {1, 1, 0};
  auto r = solve_convex(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("infeasible LP is classified") {
  ConvexProblem p;
  p.resize(1);
  p.cost[0] = 1.0;
  p.in_triplets.emplace_back(0, 0, 1.0);
  p.in_triplets.emplace_back(1, 0, -1.0);
  p.b_in = VectorXd(2);
  p.b_in << -2.0, 1.0;  // x <= -2 and x >= -1
  auto r = solve_convex(p);
  CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded LP detected") {
  ConvexProblem p;
  p.resize(1);
  p.cost[0] = -1.0;  // max x
  p.in_triplets.emplace_back(0, 0, -1.0);
  p.b_in = VectorXd::Constant(1, 0.0);  // x >= 0
  auto r = solve_convex(p);
  CHECK(r.status == SolveStatus::Unbounded);
}

TEST_CASE("diagonal QP: projection onto a halfspace") {
  // min 1/2 (x1^2 + x2^2) - (1,2)'x  s.t. x1 + x2 <= 1
  // unconstrained optimum (1,2) violates; optimum = (0,1).
  ConvexProblem p;
  p.resize(2);
  p.quad_diag = VectorXd::Ones(2);
  p.cost << -1, -2;
  p.in_triplets = {{0, 0, 1.0}, {0, 1, 1.0}};
  p.b_in = VectorXd::Constant(1, 1.0);
  auto r = solve_convex(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

// Brute force over basic solutions of {Ax <= b}: every vertex of the
// feasible polytope, evaluated on the LP objective.
static double brute_force_lp(const MatrixXd& A, const VectorXd& b, const VectorXd& c) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> comb(n);
  for (int i = 0; i < n; ++i) comb[i] = i;
  auto advance = [&]() {
    int i = n - 1;
    while (i >= 0 && comb[i] == m - n + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (int j = i + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
    return true;
  };
  do {
    MatrixXd As(n, n);
    VectorXd bs(n);
    for (int i = 0; i < n; ++i) {
      As.row(i) = A.row(comb[i]);
      bs[i] = b[comb[i]];
    }
    Eigen::FullPivLU<MatrixXd> lu(As);
    lu.setThreshold(1e-9);
    if (lu.rank() < n) continue;
    VectorXd x = lu.solve(bs);
    if (((A * x - b).array() <= 1e-8).all()) best = std::min(best, c.dot(x));
  } while (advance());
  return best;
}

TEST_CASE("random dense LPs match vertex enumeration optimum") {
  std::mt19937 gen(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 4;
    const int m = 14;
    MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = nd(gen);
    // rows through a shifted origin so the set is nonempty and bounded:
    // add a box to guarantee boundedness
    MatrixXd Afull(m + 2 * n, n);
    Afull.topRows(m) = A;
    Afull.middleRows(m, n) = MatrixXd::Identity(n, n);
    Afull.bottomRows(n) = -MatrixXd::Identity(n, n);
    VectorXd b(m + 2 * n);
    for (int i = 0; i < m; ++i) b[i] = 1.0 + std::abs(nd(gen));
    b.tail(2 * n).setConstant(5.0);
    VectorXd c(n);
    for (int j = 0; j < n; ++j) c[j] = nd(gen);

    ConvexProblem p;
    p.resize(n);
    p.cost = c;
    for (int i = 0; i < Afull.rows(); ++i)
      for (int j = 0; j < n; ++j)
        if (Afull(i, j) != 0.0) p.in_triplets.emplace_back(i, j, Afull(i, j));
    p.b_in = b;
    auto r = solve_convex(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    const double expect = brute_force_lp(Afull, b, c);
    CHECK(r.objective == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("larger random LP with equalities stays accurate") {
  std::mt19937 gen(11);
  std::normal_distribution<double> nd;
  const int n = 30;
  MatrixXd A(10, n);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = nd(gen);
  VectorXd x0 = VectorXd::NullaryExpr(n, [&](int) { return std::abs(nd(gen)); });
  VectorXd beq = A * x0;
  ConvexProblem p;
  p.resize(n);
  for (int j = 0; j < n; ++j) p.cost[j] = 1.0 + std::abs(nd(gen));
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < n; ++j) p.eq_triplets.emplace_back(i, j, A(i, j));
  p.b_eq = beq;
  p.nonneg.assign(n, 1);
  auto r = solve_convex(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.max_violation <= 1e-7);
  // objective at the known feasible point bounds the optimum
  CHECK(r.objective <= p.cost.dot(x0) + 1e-9);
}
