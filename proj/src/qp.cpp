#include "droc/qp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "droc/error.hpp"

namespace droc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 1e-12;
constexpr double kEqualityTol = 1e-8;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Gradient of the objective with respect to either coordinate of sample n:
// y_n * sum_m y_m s_m K_mn - mu.
std::vector<double> gradient(const DualSubproblem& sub, std::span<const double> gamma1,
                             std::span<const double> gamma2) {
  const std::size_t n = sub.size();
  const Matrix& K = *sub.gram;
  std::vector<double> ys(n);
  for (std::size_t m = 0; m < n; ++m) ys[m] = sub.labels[m] * (gamma1[m] + gamma2[m]);
  std::vector<double> grad(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = K.row(k);
    double g = 0.0;
    for (std::size_t m = 0; m < n; ++m) g += ys[m] * row[m];
    grad[k] = sub.labels[k] * g - sub.mu;
  }
  return grad;
}

double objective_from_gradient(std::span<const double> grad, std::span<const double> gamma1,
                               std::span<const double> gamma2, double mu) {
  double obj = 0.0;
  for (std::size_t n = 0; n < grad.size(); ++n) {
    obj += (gamma1[n] + gamma2[n]) * (grad[n] - mu);
  }
  return 0.5 * obj;
}

// One equality group as a view on the two gamma vectors. Group 0 holds
// g1_n for y_n = +1 and g2_n for y_n = -1; group 1 the complement.
struct Group {
  std::vector<double>* z[2];
  const std::vector<double>* lo[2];
  const std::vector<double>* hi[2];
  const std::vector<int>* labels;
  int which;

  // Index 0 selects gamma1 for this sample, 1 selects gamma2.
  int slot(std::size_t n) const {
    const bool positive = (*labels)[n] > 0;
    return (which == 0) == positive ? 0 : 1;
  }
  double& value(std::size_t n) const { return (*z[slot(n)])[n]; }
  double lower(std::size_t n) const { return (*lo[slot(n)])[n]; }
  double upper(std::size_t n) const { return (*hi[slot(n)])[n]; }
  // Can move along +y_n (the "up" set of the maximal violating pair rule).
  bool can_up(std::size_t n) const {
    return (*labels)[n] > 0 ? value(n) < upper(n) : value(n) > lower(n);
  }
  bool can_low(std::size_t n) const {
    return (*labels)[n] > 0 ? value(n) > lower(n) : value(n) < upper(n);
  }
};

struct Violation {
  double up_max = -kInf;  // max over up set of -y G
  double low_min = kInf;  // min over low set of -y G
  std::size_t up_index = 0;
};

Violation find_violation(const Group& group, std::span<const double> grad) {
  Violation v;
  const auto& y = *group.labels;
  for (std::size_t n = 0; n < grad.size(); ++n) {
    const double score = -y[n] * grad[n];
    if (group.can_up(n) && score > v.up_max) {
      v.up_max = score;
      v.up_index = n;
    }
    if (group.can_low(n) && score < v.low_min) v.low_min = score;
  }
  return v;
}

double group_residual(const Violation& v) {
  if (v.up_max == -kInf || v.low_min == kInf) return 0.0;
  return std::max(0.0, 0.5 * (v.up_max - v.low_min));
}

std::array<Group, 2> make_groups(std::vector<double>& gamma1, std::vector<double>& gamma2,
                                 const DualSubproblem& sub) {
  std::array<Group, 2> groups;
  for (int g = 0; g < 2; ++g) {
    groups[g] = Group{{&gamma1, &gamma2}, {&sub.lower1, &sub.lower2}, {&sub.upper1, &sub.upper2},
                      &sub.labels, g};
  }
  return groups;
}

void check_feasible(const DualSubproblem& sub, std::span<const double> gamma1,
                    std::span<const double> gamma2) {
  const std::size_t n = sub.size();
  if (gamma1.size() != n || gamma2.size() != n) {
    throw DimensionMismatch("dual point has wrong dimension");
  }
  if (!all_finite(gamma1) || !all_finite(gamma2)) throw NonFiniteInput("dual point is not finite");
  double eq_label = 0.0;
  double eq_split = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double slack1 = 1e-12 * (1.0 + std::abs(sub.lower1[i]) + std::abs(sub.upper1[i]));
    const double slack2 = 1e-12 * (1.0 + std::abs(sub.lower2[i]) + std::abs(sub.upper2[i]));
    if (gamma1[i] < sub.lower1[i] - slack1 || gamma1[i] > sub.upper1[i] + slack1 ||
        gamma2[i] < sub.lower2[i] - slack2 || gamma2[i] > sub.upper2[i] + slack2) {
      throw InfeasiblePoint("dual point leaves the box at coordinate " + std::to_string(i));
    }
    eq_label += sub.labels[i] * (gamma1[i] + gamma2[i]);
    eq_split += gamma1[i] - gamma2[i];
  }
  if (std::abs(eq_label) > kEqualityTol || std::abs(eq_split) > kEqualityTol) {
    throw InfeasiblePoint("dual point violates an equality constraint");
  }
}

}  // namespace

DualSubproblem make_subproblem(GramPtr gram, std::vector<int> labels, const RiskParams& params,
                               std::span<const double> beta1, std::span<const double> beta2) {
  validate(params);
  const std::size_t n = labels.size();
  if (beta1.size() != n || beta2.size() != n) {
    throw DimensionMismatch("beta vectors must match the number of samples");
  }
  DualSubproblem sub;
  sub.gram = std::move(gram);
  sub.labels = std::move(labels);
  sub.mu = params.mu;
  const double width1 = params.C * params.d / params.mu;
  const double width2 = params.C * (1.0 - params.d) / params.mu;
  sub.lower1.resize(n);
  sub.upper1.resize(n);
  sub.lower2.resize(n);
  sub.upper2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sub.lower1[i] = -beta1[i];
    sub.upper1[i] = width1 - beta1[i];
    sub.lower2[i] = -beta2[i];
    sub.upper2[i] = width2 - beta2[i];
  }
  return sub;
}

void validate(const DualSubproblem& sub) {
  const std::size_t n = sub.size();
  if (!sub.gram) throw InvalidArgument("dual subproblem has no Gram matrix");
  if (sub.gram->rows() != n || sub.gram->cols() != n) {
    throw DimensionMismatch("Gram matrix is " + std::to_string(sub.gram->rows()) + "x" +
                            std::to_string(sub.gram->cols()) + " for " + std::to_string(n) +
                            " samples");
  }
  if (sub.lower1.size() != n || sub.upper1.size() != n || sub.lower2.size() != n ||
      sub.upper2.size() != n) {
    throw DimensionMismatch("box bounds must have one entry per sample");
  }
  if (!std::isfinite(sub.mu) || !all_finite(sub.gram->data()) || !all_finite(sub.lower1) ||
      !all_finite(sub.upper1) || !all_finite(sub.lower2) || !all_finite(sub.upper2)) {
    throw NonFiniteInput("dual subproblem contains NaN or Inf");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (sub.labels[i] != 1 && sub.labels[i] != -1) {
      throw InvalidArgument("labels must be -1 or +1");
    }
    if (!(sub.lower1[i] <= 0.0 && 0.0 <= sub.upper1[i] && sub.lower2[i] <= 0.0 &&
          0.0 <= sub.upper2[i])) {
      throw InvalidArgument("every box must contain zero (sample " + std::to_string(i) + ")");
    }
  }
}

double dual_objective(const DualSubproblem& sub, std::span<const double> gamma1,
                      std::span<const double> gamma2) {
  if (gamma1.size() != sub.size() || gamma2.size() != sub.size()) {
    throw DimensionMismatch("dual point has wrong dimension");
  }
  const auto grad = gradient(sub, gamma1, gamma2);
  return objective_from_gradient(grad, gamma1, gamma2, sub.mu);
}

double kkt_residual(const DualSubproblem& sub, std::span<const double> gamma1,
                    std::span<const double> gamma2) {
  validate(sub);
  check_feasible(sub, gamma1, gamma2);
  std::vector<double> g1(gamma1.begin(), gamma1.end());
  std::vector<double> g2(gamma2.begin(), gamma2.end());
  const auto grad = gradient(sub, g1, g2);
  auto groups = make_groups(g1, g2, sub);
  double residual = 0.0;
  for (const auto& group : groups) {
    residual = std::max(residual, group_residual(find_violation(group, grad)));
  }
  return residual;
}

DualSolution solve_dual(const DualSubproblem& sub, const SolverOptions& options,
                        const std::optional<DualPoint>& start) {
  validate(sub);
  if (!(options.tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  const std::size_t n = sub.size();
  const Matrix& K = *sub.gram;
  const std::vector<int>& y = sub.labels;

  DualSolution sol;
  if (start) {
    check_feasible(sub, start->gamma1, start->gamma2);
    sol.gamma1 = start->gamma1;
    sol.gamma2 = start->gamma2;
  } else {
    sol.gamma1.assign(n, 0.0);
    sol.gamma2.assign(n, 0.0);
  }
  const std::size_t max_iter =
      options.max_iter > 0 ? options.max_iter : std::max<std::size_t>(1000, 100 * n * n);

  auto groups = make_groups(sol.gamma1, sol.gamma2, sub);
  std::vector<double> grad = gradient(sub, sol.gamma1, sol.gamma2);
  if (options.record_trace) {
    sol.objective_trace.push_back(objective_from_gradient(grad, sol.gamma1, sol.gamma2, sub.mu));
  }

  std::size_t iter = 0;
  for (;;) {
    // Pick the group and pair with the largest second-order gain.
    double best_gain = 0.0;
    int best_group = -1;
    std::size_t best_i = 0;
    std::size_t best_j = 0;
    double residual = 0.0;
    for (int g = 0; g < 2; ++g) {
      const Group& group = groups[g];
      const Violation v = find_violation(group, grad);
      residual = std::max(residual, group_residual(v));
      if (v.up_max == -kInf || v.low_min == kInf || v.up_max - v.low_min <= 0.0) continue;
      const std::size_t i = v.up_index;
      const auto Ki = K.row(i);
      for (std::size_t t = 0; t < n; ++t) {
        if (!group.can_low(t)) continue;
        const double gap = v.up_max + y[t] * grad[t];
        if (gap <= 0.0) continue;
        double curvature = Ki[i] + K(t, t) - 2.0 * Ki[t];
        if (curvature <= 0.0) curvature = kTau;
        const double gain = gap * gap / curvature;
        if (gain > best_gain) {
          best_gain = gain;
          best_group = g;
          best_i = i;
          best_j = t;
        }
      }
    }
    if (residual <= options.tol) {
      sol.converged = true;
      break;
    }
    if (iter >= max_iter || best_group < 0) break;

    const Group& group = groups[best_group];
    const std::size_t i = best_i;
    const std::size_t j = best_j;
    const auto Ki = K.row(i);
    const auto Kj = K.row(j);
    double curvature = Ki[i] + Kj[j] - 2.0 * Ki[j];
    if (curvature <= 0.0) curvature = kTau;
    // Objective along z_i += y_i t, z_j -= y_j t has slope y_i G_i - y_j G_j.
    const double slope = y[i] * grad[i] - y[j] * grad[j];
    double step = -slope / curvature;
    double& zi = group.value(i);
    double& zj = group.value(j);
    const double room_i = y[i] > 0 ? group.upper(i) - zi : zi - group.lower(i);
    const double room_j = y[j] > 0 ? zj - group.lower(j) : group.upper(j) - zj;
    bool clip_i = false;
    bool clip_j = false;
    if (step >= room_i) {
      step = room_i;
      clip_i = true;
    }
    if (step >= room_j) {
      step = room_j;
      clip_j = true;
      clip_i = step >= room_i;
    }
    if (step <= 0.0) break;

    const double old_i = zi;
    const double old_j = zj;
    zi = clip_i ? (y[i] > 0 ? group.upper(i) : group.lower(i)) : zi + y[i] * step;
    zj = clip_j ? (y[j] > 0 ? group.lower(j) : group.upper(j)) : zj - y[j] * step;
    const double delta_i = zi - old_i;  // change of s_i
    const double delta_j = zj - old_j;  // change of s_j
    for (std::size_t k = 0; k < n; ++k) {
      grad[k] += y[k] * (y[i] * delta_i * Ki[k] + y[j] * delta_j * Kj[k]);
    }
    ++iter;
    if (options.record_trace) {
      sol.objective_trace.push_back(
          objective_from_gradient(grad, sol.gamma1, sol.gamma2, sub.mu));
    }
  }

  grad = gradient(sub, sol.gamma1, sol.gamma2);
  sol.iterations = iter;
  sol.objective = objective_from_gradient(grad, sol.gamma1, sol.gamma2, sub.mu);
  double residual = 0.0;
  for (const auto& group : groups) {
    residual = std::max(residual, group_residual(find_violation(group, grad)));
  }
  sol.kkt_residual = residual;
  sol.converged = residual <= options.tol;
  return sol;
}

}  // namespace droc
