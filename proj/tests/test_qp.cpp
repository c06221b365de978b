#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "droc/error.hpp"
#include "droc/qp.hpp"
#include "qp_oracle.hpp"
#include "test_support.hpp"

namespace droc {
namespace {

DualSubproblem two_point_instance() {
  Matrix K(2, 2);
  K(0, 0) = K(1, 1) = 1.0;
  const std::vector<double> zero(2, 0.0);
  return make_subproblem(std::make_shared<const Matrix>(K), {1, -1}, RiskParams{1, 0.2, 1}, zero,
                         zero);
}

TEST(DualObjective, Examples) {
  const auto sub = two_point_instance();
  const std::vector<double> zero(2, 0.0), g(2, 0.2);
  EXPECT_EQ(dual_objective(sub, zero, zero), 0.0);
  EXPECT_NEAR(dual_objective(sub, g, g), -0.64, 1e-15);
}

TEST(MakeSubproblem, BoxesFollowBetas) {
  Matrix K(2, 2, 1.0);
  const std::vector<double> b1{0.4, 0.0}, b2{0.0, 1.6};
  const auto sub =
      make_subproblem(std::make_shared<const Matrix>(K), {1, -1}, RiskParams{2, 0.2, 1}, b1, b2);
  EXPECT_NEAR(sub.lower1[0], -0.4, 1e-15);
  EXPECT_NEAR(sub.upper1[0], 0.0, 1e-15);
  EXPECT_NEAR(sub.upper1[1], 0.4, 1e-15);
  EXPECT_NEAR(sub.lower2[1], -1.6, 1e-15);
  EXPECT_NEAR(sub.upper2[0], 1.6, 1e-15);
}

TEST(Validate, RejectsMalformedSubproblems) {
  auto sub = two_point_instance();
  sub.labels[0] = 2;
  EXPECT_THROW(validate(sub), InvalidArgument);
  sub = two_point_instance();
  sub.upper1[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_ANY_THROW(validate(sub));
  sub = two_point_instance();
  sub.lower2.pop_back();
  EXPECT_THROW(validate(sub), DimensionMismatch);
}

TEST(SolveDual, TwoPointOptimum) {
  const auto sub = two_point_instance();
  const auto sol = solve_dual(sub);
  ASSERT_TRUE(sol.converged);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(sol.gamma1[i], 0.2, 1e-9);
    EXPECT_NEAR(sol.gamma2[i], 0.2, 1e-9);
  }
  EXPECT_NEAR(sol.objective, -0.64, 1e-12);
  EXPECT_LE(kkt_residual(sub, sol.gamma1, sol.gamma2), 1e-8);
}

TEST(KktResidual, LargeAtZeroOnTwoPointInstance) {
  const auto sub = two_point_instance();
  const std::vector<double> zero(2, 0.0);
  EXPECT_GT(kkt_residual(sub, zero, zero), 0.5);
}

TEST(KktResidual, InfeasiblePointsThrow) {
  const auto sub = two_point_instance();
  const std::vector<double> out_of_box{0.5, 0.0}, zero(2, 0.0);
  EXPECT_THROW(kkt_residual(sub, out_of_box, zero), InfeasiblePoint);
  const std::vector<double> unbalanced{0.1, 0.0};
  EXPECT_THROW(kkt_residual(sub, unbalanced, zero), InfeasiblePoint);
}

TEST(SolveDual, ZeroSlopeGivesZero) {
  auto sub = testing::random_subproblem(6, 3);
  sub.mu = 0.0;
  for (auto* v : {&sub.lower1, &sub.lower2}) std::fill(v->begin(), v->end(), 0.0);
  const auto sol = solve_dual(sub);
  EXPECT_NEAR(sol.objective, 0.0, 1e-12);
}

TEST(SolveDual, MatchesOracleOnSmallInstances) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t n = 2 + seed % 5;
    const auto sub = testing::random_subproblem(n, 1000 + seed);
    const auto sol = solve_dual(sub);
    const auto ref = testing::oracle_solve(sub);
    EXPECT_TRUE(sol.converged);
    EXPECT_NEAR(sol.objective, ref.objective, 1e-4) << "seed " << seed;
    EXPECT_LE(sol.kkt_residual, 1e-6);
    const auto [e1, e2] = testing::equality_residuals(sub, sol.gamma1, sol.gamma2);
    EXPECT_LE(std::abs(e1), 1e-8);
    EXPECT_LE(std::abs(e2), 1e-8);
  }
}

TEST(SolveDual, IteratesStayFeasibleAndObjectiveDecreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sub = testing::random_subproblem(30, 50 + seed);
    SolverOptions opts;
    opts.record_trace = true;
    const auto sol = solve_dual(sub, opts);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i) {
      EXPECT_LE(sol.objective_trace[i], sol.objective_trace[i - 1] + 1e-12);
    }
    for (std::size_t i = 0; i < sub.size(); ++i) {
      EXPECT_GE(sol.gamma1[i], sub.lower1[i]);
      EXPECT_LE(sol.gamma1[i], sub.upper1[i]);
      EXPECT_GE(sol.gamma2[i], sub.lower2[i]);
      EXPECT_LE(sol.gamma2[i], sub.upper2[i]);
    }
    EXPECT_NO_THROW(kkt_residual(sub, sol.gamma1, sol.gamma2));
  }
}

TEST(SolveDual, WarmStartReachesSameObjective) {
  const auto sub = testing::random_subproblem(25, 77);
  const auto cold = solve_dual(sub);
  const auto warm = solve_dual(sub, {}, DualPoint{cold.gamma1, cold.gamma2});
  EXPECT_NEAR(warm.objective, cold.objective, 1e-10);
  EXPECT_LE(warm.iterations, 2u);
}

TEST(SolveDual, IterationCapFlagsNonConvergence) {
  const auto sub = testing::random_subproblem(40, 8);
  SolverOptions opts;
  opts.max_iter = 1;
  const auto sol = solve_dual(sub, opts);
  EXPECT_FALSE(sol.converged);
  EXPECT_NO_THROW(kkt_residual(sub, sol.gamma1, sol.gamma2));
}

TEST(SolveDual, TightToleranceOptimalityCases) {
  // Coordinates strictly inside the box have zero reduced gradient; at a
  // bound the reduced gradient points outward. Checked via the residual.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sub = testing::random_subproblem(12, 300 + seed);
    SolverOptions opts;
    opts.tol = 1e-8;
    const auto sol = solve_dual(sub, opts);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(kkt_residual(sub, sol.gamma1, sol.gamma2), 1e-8);
  }
}

}  // namespace
}  // namespace droc
