#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "droc/kernels.hpp"
#include "droc/losses.hpp"

namespace droc {

/// Convex dual subproblem of one DC iteration:
///
///   min  1/2 sum_nm y_n y_m s_n s_m K_nm - mu sum_n s_n,   s = g1 + g2
///   s.t. lower1 <= g1 <= upper1,  lower2 <= g2 <= upper2,
///        sum_n y_n s_n = 0,  sum_n (g1_n - g2_n) = 0.
///
/// Every box contains 0, so the zero vector is always feasible.
struct DualSubproblem {
  GramPtr gram;
  std::vector<int> labels;
  double mu = 1.0;
  std::vector<double> lower1, upper1;
  std::vector<double> lower2, upper2;

  std::size_t size() const { return labels.size(); }
};

/// Boxes induced by the concave-part weights:
/// g1_n in [-beta1_n, Cd/mu - beta1_n], g2_n in [-beta2_n, C(1-d)/mu - beta2_n].
DualSubproblem make_subproblem(GramPtr gram, std::vector<int> labels, const RiskParams& params,
                               std::span<const double> beta1, std::span<const double> beta2);

/// Throws DimensionMismatch, NonFiniteInput or InvalidArgument when the
/// subproblem is not well formed.
void validate(const DualSubproblem& sub);

struct DualSolution {
  std::vector<double> gamma1;
  std::vector<double> gamma2;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Objective after every pair update (only filled on request).
  std::vector<double> objective_trace;
};

struct SolverOptions {
  double tol = 1e-6;
  /// Pair updates allowed; 0 selects 100·N sweeps of N updates (at least 1000).
  std::size_t max_iter = 0;
  bool record_trace = false;
};

/// Starting point for solve_dual; must be feasible.
struct DualPoint {
  std::vector<double> gamma1;
  std::vector<double> gamma2;
};

double dual_objective(const DualSubproblem& sub, std::span<const double> gamma1,
                      std::span<const double> gamma2);

/// Largest projected-gradient magnitude after the two equality multipliers
/// are chosen optimally. Zero exactly at an optimum. Throws InfeasiblePoint
/// when the point leaves the box or violates an equality by more than 1e-8.
double kkt_residual(const DualSubproblem& sub, std::span<const double> gamma1,
                    std::span<const double> gamma2);

/// Two-coordinate working-set solver.
///
/// The equalities split the 2N coordinates into two groups with one
/// coordinate per sample each: {g1_n : y_n = +1} + {g2_n : y_n = -1} obey
/// sum y_n z_n = 0, and so do {g2_n : y_n = +1} + {g1_n : y_n = -1}. Every
/// update moves a pair inside one group along y_i e_i - y_j e_j, which keeps
/// both equalities, and minimizes the objective exactly on that line before
/// clipping to the box. The pair is the maximal violating pair with
/// second-order selection of the second index.
///
/// When max_iter is exhausted the last (best) iterate is returned with
/// converged == false.
DualSolution solve_dual(const DualSubproblem& sub, const SolverOptions& options = {},
                        const std::optional<DualPoint>& start = std::nullopt);

}  // namespace droc
