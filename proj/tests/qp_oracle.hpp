#pragma once

// Independent reference solver for small dual subproblems: accelerated
// projected gradient with a fixed 1/L step and an exact Euclidean
// projection onto each equality group (bisection on the multiplier).
// Test-only; shares nothing with the working-set solver beyond the
// subproblem definition.

#include <algorithm>
#include <cmath>
#include <vector>

#include "droc/qp.hpp"

namespace droc::testing {

struct OracleResult {
  std::vector<double> gamma1;
  std::vector<double> gamma2;
  double objective = 0.0;
};

inline double oracle_objective(const DualSubproblem& sub, const std::vector<double>& g1,
                               const std::vector<double>& g2) {
  const std::size_t n = sub.size();
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    lin += g1[a] + g2[a];
    for (std::size_t b = 0; b < n; ++b) {
      quad += sub.labels[a] * sub.labels[b] * (g1[a] + g2[a]) * (g1[b] + g2[b]) * (*sub.gram)(a, b);
    }
  }
  return 0.5 * quad - sub.mu * lin;
}

// Projects (p1, p2) onto the feasible set in place. The equality
// sum y (g1 + g2) = 0 and sum (g1 - g2) = 0 are equivalent to
// sum_{y=+1} g1 = sum_{y=-1} g2 and sum_{y=+1} g2 = sum_{y=-1} g1,
// so the set is a product of two "box + one hyperplane" sets.
inline void oracle_project(const DualSubproblem& sub, std::vector<double>& p1,
                           std::vector<double>& p2) {
  const std::size_t n = sub.size();
  for (int group = 0; group < 2; ++group) {
    std::vector<double*> value;
    std::vector<double> lo, hi, sign;
    for (std::size_t i = 0; i < n; ++i) {
      const bool first = (group == 0) == (sub.labels[i] > 0);
      value.push_back(first ? &p1[i] : &p2[i]);
      lo.push_back(first ? sub.lower1[i] : sub.lower2[i]);
      hi.push_back(first ? sub.upper1[i] : sub.upper2[i]);
      sign.push_back(sub.labels[i]);
    }
    std::vector<double> w(n);
    double span = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = *value[i];
      span = std::max({span, std::abs(w[i]), std::abs(lo[i]), std::abs(hi[i])});
    }
    auto h = [&](double lambda) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += sign[i] * std::clamp(w[i] - lambda * sign[i], lo[i], hi[i]);
      return s;
    };
    double a = -4.0 * span;
    double b = 4.0 * span;
    for (int it = 0; it < 200 && b - a > 1e-16 * span; ++it) {
      const double mid = 0.5 * (a + b);
      if (h(mid) > 0.0) a = mid; else b = mid;
    }
    const double lambda = 0.5 * (a + b);
    for (std::size_t i = 0; i < n; ++i) *value[i] = std::clamp(w[i] - lambda * sign[i], lo[i], hi[i]);
  }
}

inline OracleResult oracle_solve(const DualSubproblem& sub, int max_iter = 60000) {
  const std::size_t n = sub.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += (*sub.gram)(i, i);
  const double lipschitz = std::max(2.0 * trace, 1e-9);
  const double step = 1.0 / lipschitz;

  std::vector<double> x1(n, 0.0), x2(n, 0.0), z1(n, 0.0), z2(n, 0.0);
  std::vector<double> prev1 = x1, prev2 = x2;
  double t = 1.0;
  double prev_obj = oracle_objective(sub, x1, x2);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> grad(n);
    for (std::size_t k = 0; k < n; ++k) {
      double g = 0.0;
      for (std::size_t m = 0; m < n; ++m) g += sub.labels[m] * (z1[m] + z2[m]) * (*sub.gram)(m, k);
      grad[k] = sub.labels[k] * g - sub.mu;
    }
    std::vector<double> n1(n), n2(n);
    for (std::size_t k = 0; k < n; ++k) {
      n1[k] = z1[k] - step * grad[k];
      n2[k] = z2[k] - step * grad[k];
    }
    oracle_project(sub, n1, n2);
    const double obj = oracle_objective(sub, n1, n2);
    double change = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      change = std::max({change, std::abs(n1[k] - x1[k]), std::abs(n2[k] - x2[k])});
    }
    if (obj > prev_obj) {
      // Adaptive restart keeps the accelerated sequence monotone.
      t = 1.0;
      z1 = x1;
      z2 = x2;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t k = 0; k < n; ++k) {
      z1[k] = n1[k] + ((t - 1.0) / t_next) * (n1[k] - x1[k]);
      z2[k] = n2[k] + ((t - 1.0) / t_next) * (n2[k] - x2[k]);
    }
    x1 = n1;
    x2 = n2;
    t = t_next;
    prev_obj = obj;
    if (change < 1e-15) break;
  }
  oracle_project(sub, x1, x2);
  return {x1, x2, oracle_objective(sub, x1, x2)};
}

}  // namespace droc::testing
