#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "dampc/errors.hpp"
#include "dampc/model.hpp"

using namespace dampc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("two-state matrices at theta = 0, (1,0), (0,1)") {
  auto md = build_two_state_model();
  auto [A, B] = eval_matrices(md, VectorXd::Zero(2));
  CHECK((A - md.A_list[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((B - md.B_list[0]).cwiseAbs().maxCoeff() == 0.0);

  auto [A1, B1] = eval_matrices(md, (VectorXd(2) << 1, 0).finished());
  MatrixXd Aexp(2, 2);
  Aexp << 0.95, 0.5, 0.2, 0.9;
  CHECK((A1 - Aexp).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((B1 - md.B_list[0]).cwiseAbs().maxCoeff() < 1e-15);

  auto [A2, B2] = eval_matrices(md, (VectorXd(2) << 0, 1).finished());
  MatrixXd Bexp(2, 2);
  Bexp << 1, 0.6, 0.2, 0.95;
  CHECK((B2 - Bexp).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((A2 - md.A_list[0]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("eval_matrices is affine in theta") {
  auto md = build_two_state_model();
  std::mt19937 gen(2);
  std::uniform_real_distribution<double> ud(-1, 1);
  for (int i = 0; i < 10; ++i) {
    VectorXd t1(2), t2(2);
    t1 << ud(gen), ud(gen);
    t2 << ud(gen), ud(gen);
    auto [Aa, Ba] = eval_matrices(md, t1);
    auto [Ab, Bb] = eval_matrices(md, t2);
    auto [A0, B0] = eval_matrices(md, VectorXd::Zero(2));
    auto [As, Bs] = eval_matrices(md, t1 + t2);
    CHECK((Aa + Ab - A0 - As).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((Ba + Bb - B0 - Bs).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("rank assumption holds for the two-state study") {
  auto md = build_two_state_model();
  auto rep = check_rank_assumption(md, md.Theta0.vertices());
  CHECK(rep.pass());
  CHECK(rep.worst_sigma_min > 1e-4);
}

TEST_CASE("rank assumption fails for C = 0 and for m < n_y") {
  auto md = build_two_state_model();
  md.C = MatrixXd::Zero(2, 2);
  auto rep = check_rank_assumption(md, md.Theta0.vertices());
  CHECK(!rep.equilibrium_rank_ok);

  auto md2 = build_two_state_model();
  // single-input variant: drop the second input channel
  for (auto& B : md2.B_list) B = B.leftCols(1).eval();
  md2.G = md2.G.leftCols(1).eval();
  md2.R = MatrixXd::Identity(1, 1);
  auto rep2 = check_rank_assumption(md2, md2.Theta0.vertices());
  CHECK(!rep2.input_count_ok);
  CHECK(!rep2.pass());
}

TEST_CASE("support constants: degenerate W and unit-box X0") {
  auto md = build_two_state_model();
  // W = {0}
  md.W = Polytope(md.W.H(), VectorXd::Zero(4));
  auto X0 = Polytope::inf_ball(2, 1.0);
  auto [f_bar, w_bar, ff] = compute_support_constants(md, MatrixXd::Zero(2, 2), X0);
  CHECK(w_bar.cwiseAbs().maxCoeff() < 1e-9);
  // row (1,0) of F+GK is F row 1 = (1/3, 0): support over unit box = 1/3
  CHECK(f_bar[0] == doctest::Approx(1.0 / 3).epsilon(1e-7));
  CHECK(ff == doctest::Approx(1.0 / 3).epsilon(1e-7));
}

TEST_CASE("contractive set: deadbeat and scaled identity fixed points") {
  auto box = Polytope::inf_ball(2, 1.0);
  std::vector<MatrixXd> deadbeat = {MatrixXd::Zero(2, 2)};
  auto S = compute_contractive_set(deadbeat, 0.5, box);
  CHECK(S.num_rows() == 4);
  CHECK(S.vertices().size() == 4);

  std::vector<MatrixXd> scaled = {0.9 * MatrixXd::Identity(2, 2)};
  auto S2 = compute_contractive_set(scaled, 0.96, box);
  CHECK(S2.num_rows() == 4);
  for (const auto& v : S2.vertices()) CHECK(std::abs(v.cwiseAbs().maxCoeff() - 1.0) < 1e-9);
}

TEST_CASE("two-state offline design reproduces the 4-facet 4-vertex shape set") {
  auto md = build_two_state_model();
  DesignOptions opts;
  opts.lambda_c = 0.96;
  opts.theta_nominal = (VectorXd(2) << 0.1, 0.1).finished();
  auto d = offline_design(md, opts);
  CHECK(d.nx() == 4);
  CHECK(d.q() == 4);
  CHECK(d.contractivity_slack(md) <= 1e-8);
  CHECK(d.lambda_c <= 1.0 - d.ff_bar * d.w_bar.maxCoeff() + 1e-12);
}

TEST_CASE("inflated disturbance triggers RedesignNeeded") {
  auto md = build_two_state_model();
  md.W = Polytope::inf_ball(2, 1.0);  // ten times the study disturbance
  DesignOptions opts;
  opts.lambda_c = 0.96;
  opts.theta_nominal = (VectorXd(2) << 0.1, 0.1).finished();
  CHECK_THROWS_AS(offline_design(md, opts), RedesignNeeded);
}

TEST_CASE("mass-spring discretization entries") {
  auto md = build_mass_spring_model();
  const auto& A0 = md.A_list[0];
  CHECK(A0(1, 0) == doctest::Approx(-0.32).epsilon(1e-12));
  VectorXd row0 = A0.row(0);
  VectorXd row0_exp(6);
  row0_exp << 1, 0.1, 0, 0, 0, 0;
  CHECK((row0 - row0_exp).cwiseAbs().maxCoeff() < 1e-15);
  const auto& B0 = md.B_list[0];
  CHECK(B0(1, 0) == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(B0(3, 1) == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(B0(5, 2) == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(B0.cwiseAbs().sum() == doctest::Approx(3 * 0.64).epsilon(1e-12));
  // uncertainty columns: positions are never directly actuated
  for (int i = 0; i <= 5; ++i) {
    CHECK(md.B_list[i](0, 0) == 0.0);
    CHECK(md.A_list[i].rows() == 6);
  }
}

TEST_CASE("Euler discretization preserves the affine structure") {
  auto md = build_mass_spring_model();
  std::mt19937 gen(4);
  std::uniform_real_distribution<double> ud(-1, 1);
  VectorXd th = VectorXd::NullaryExpr(5, [&](int) { return ud(gen); });
  auto [Ad, Bd] = eval_matrices(md, th);
  // reconstruct I + 0.1 * A_c(theta) from the stored increments
  MatrixXd Ac = (md.A_list[0] - MatrixXd::Identity(6, 6)) / 0.1;
  for (int i = 0; i < 5; ++i) Ac += th[i] * md.A_list[i + 1] / 0.1;
  CHECK((Ad - (MatrixXd::Identity(6, 6) + 0.1 * Ac)).cwiseAbs().maxCoeff() < 1e-13);
  (void)Bd;
}

TEST_CASE("model validation rejects bad shapes and horizons") {
  auto md = build_two_state_model();
  md.N_theta = 1;
  CHECK_THROWS_AS(md.validate(), Error);
  auto md2 = build_two_state_model();
  md2.refs.pop_back();
  CHECK_THROWS_AS(md2.validate(), DimensionMismatch);
  auto md3 = build_two_state_model();
  md3.G = MatrixXd::Zero(8, 2);  // inputs unbounded -> Z unbounded
  CHECK_THROWS_AS(md3.validate(), Unbounded);
}

TEST_CASE("default reference holds each level") {
  std::vector<VectorXd> levels(5, VectorXd::Zero(1));
  for (int i = 0; i < 5; ++i) levels[i][0] = i;
  auto refs = default_reference(99, levels);
  CHECK(refs.size() == 100);
  CHECK(refs[0][0] == 0);
  CHECK(refs[99][0] == 4);
  int switches = 0;
  for (std::size_t t = 1; t < refs.size(); ++t)
    if (refs[t][0] != refs[t - 1][0]) ++switches;
  CHECK(switches == 4);
}
