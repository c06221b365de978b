#include "droc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "droc/error.hpp"

namespace droc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Coefficients at or below this magnitude are dropped from the model.
constexpr double kPruneThreshold = 1e-10;
// Risk decrease that counts as progress for the stall test.
constexpr double kStallDecrease = 1e-8;
constexpr int kStallRounds = 2;
// Relative rounding slack when comparing successive risks.
constexpr double kRoundoffSlack = 1e-12;
constexpr double kRetryTol = 1e-12;

// g_n = sum_m y_m s_m K(m, n), i.e. w' phi(x_n).
std::vector<double> kernel_scores(std::span<const double> gamma1, std::span<const double> gamma2,
                                  const Matrix& gram, std::span<const int> labels) {
  const std::size_t n = labels.size();
  if (gamma1.size() != n || gamma2.size() != n || gram.rows() != n || gram.cols() != n) {
    throw DimensionMismatch("state, Gram matrix and labels disagree in size");
  }
  std::vector<double> ys(n);
  for (std::size_t m = 0; m < n; ++m) ys[m] = labels[m] * (gamma1[m] + gamma2[m]);
  std::vector<double> g(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = gram.row(k);
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) acc += ys[m] * row[m];
    g[k] = acc;
  }
  return g;
}

double weight_norm_sq(std::span<const double> g, std::span<const double> gamma1,
                      std::span<const double> gamma2, std::span<const int> labels) {
  double norm = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) norm += labels[n] * (gamma1[n] + gamma2[n]) * g[n];
  return norm;
}

double risk_from_scores(std::span<const double> g, std::span<const double> gamma1,
                        std::span<const double> gamma2, double b, double rho,
                        std::span<const int> labels, const RiskParams& params) {
  double loss = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    loss += detail::double_ramp(labels[n] * (g[n] + b), rho, params.d, params.mu);
  }
  return 0.5 * weight_norm_sq(g, gamma1, gamma2, labels) + params.C * loss;
}

// Minimizing interval of
//   F(t) = sum_i wd_i [a_i - t]_+ + sum_j wi_j [t - c_j]_+ + slope * t.
struct Hinge {
  double at;
  double weight;
};

std::pair<double, double> minimize_piecewise_linear(std::vector<Hinge> decreasing,
                                                    std::vector<Hinge> increasing, double slope) {
  double total = std::abs(slope);
  double left_slope = slope;
  std::vector<Hinge> kinks;
  kinks.reserve(decreasing.size() + increasing.size());
  for (const auto& h : decreasing) {
    left_slope -= h.weight;
    total += h.weight;
    kinks.push_back(h);
  }
  for (const auto& h : increasing) {
    total += h.weight;
    kinks.push_back(h);
  }
  std::sort(kinks.begin(), kinks.end(), [](const Hinge& a, const Hinge& b) { return a.at < b.at; });
  const double tol = 1e-12 * std::max(total, 1.0);
  double lo = left_slope >= -tol ? -kInf : kInf;
  double hi = kInf;
  double running = left_slope;
  bool lo_found = left_slope >= -tol;
  for (const auto& k : kinks) {
    running += k.weight;
    if (!lo_found && running >= -tol) {
      lo = k.at;
      lo_found = true;
    }
    if (running > tol) {
      hi = k.at;
      break;
    }
  }
  if (!lo_found) lo = kinks.empty() ? -kInf : kinks.back().at;
  if (hi < lo) hi = lo;
  return {lo, hi};
}

// Pulls a warm start into the new boxes and restores both equalities by
// shrinking coordinates toward zero inside each equality group.
std::optional<DualPoint> repair_warm_start(const DCState& state, const DualSubproblem& sub) {
  const std::size_t n = sub.size();
  DualPoint point{state.gamma1, state.gamma2};
  for (std::size_t i = 0; i < n; ++i) {
    point.gamma1[i] = std::clamp(point.gamma1[i], sub.lower1[i], sub.upper1[i]);
    point.gamma2[i] = std::clamp(point.gamma2[i], sub.lower2[i], sub.upper2[i]);
  }
  for (int group = 0; group < 2; ++group) {
    auto value = [&](std::size_t i) -> double& {
      const bool first = (group == 0) == (sub.labels[i] > 0);
      return first ? point.gamma1[i] : point.gamma2[i];
    };
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += sub.labels[i] * value(i);
    for (std::size_t i = 0; i < n && residual != 0.0; ++i) {
      double& z = value(i);
      const double contribution = sub.labels[i] * z;
      if (contribution == 0.0 || (contribution > 0.0) != (residual > 0.0)) continue;
      const double cut = std::min(std::abs(contribution), std::abs(residual));
      const double new_contribution = contribution - std::copysign(cut, contribution);
      residual -= contribution - new_contribution;
      z = sub.labels[i] * new_contribution;
    }
    if (std::abs(residual) > 1e-12) return std::nullopt;
  }
  try {
    (void)kkt_residual(sub, point.gamma1, point.gamma2);
  } catch (const InfeasiblePoint&) {
    return std::nullopt;
  }
  return point;
}

Model build_model(const Dataset& data, const Hyperparams& hyper, const DCState& state,
                  const Standardization& standardization, const Diagnostics& diag) {
  std::vector<SupportVector> support;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const double s = state.gamma1[n] + state.gamma2[n];
    if (std::abs(s) > kPruneThreshold) {
      const auto row = data.X.row(n);
      support.push_back({std::vector<double>(row.begin(), row.end()), data.y[n] * s});
    }
  }
  return Model(hyper.kernel, std::move(support), state.b, state.rho, standardization, hyper, diag);
}

double sup_change(std::span<const double> a, std::span<const double> b) {
  double change = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) change = std::max(change, std::abs(a[i] - b[i]));
  return change;
}

}  // namespace

void validate(const Hyperparams& hyper) {
  validate(hyper.risk());
  validate(hyper.kernel);
  if (!(hyper.dc_tol >= 0.0)) throw InvalidArgument("dc_tol must be non-negative");
  if (!(hyper.qp_tol > 0.0)) throw InvalidArgument("qp_tol must be positive");
  if (!(hyper.sv_tol >= 0.0 && hyper.sv_tol < 0.5)) {
    throw InvalidArgument("sv_tol must lie in [0, 0.5)");
  }
}

DCState DCState::zero(std::size_t n, double b, double rho) {
  DCState state;
  state.gamma1.assign(n, 0.0);
  state.gamma2.assign(n, 0.0);
  state.beta1.assign(n, 0.0);
  state.beta2.assign(n, 0.0);
  state.b = b;
  state.rho = rho;
  return state;
}

BetaWeights compute_betas(std::span<const double> margins, double rho, const RiskParams& params) {
  validate(params);
  const double mu2 = params.mu * params.mu;
  const double w1 = params.C * params.d / params.mu;
  const double w2 = params.C * (1.0 - params.d) / params.mu;
  BetaWeights out;
  out.beta1.reserve(margins.size());
  out.beta2.reserve(margins.size());
  for (const double m : margins) {
    out.beta1.push_back(m - rho < -mu2 ? w1 : 0.0);
    out.beta2.push_back(m + rho < -mu2 ? w2 : 0.0);
  }
  return out;
}

std::vector<double> decision_values(std::span<const double> gamma1, std::span<const double> gamma2,
                                    double b, const Matrix& gram, std::span<const int> labels) {
  auto f = kernel_scores(gamma1, gamma2, gram, labels);
  for (double& v : f) v += b;
  return f;
}

std::vector<double> margins_of(std::span<const double> gamma1, std::span<const double> gamma2,
                               double b, const Matrix& gram, std::span<const int> labels) {
  auto f = decision_values(gamma1, gamma2, b, gram, labels);
  for (std::size_t n = 0; n < f.size(); ++n) f[n] *= labels[n];
  return f;
}

double regularized_risk(std::span<const double> gamma1, std::span<const double> gamma2, double b,
                        double rho, const Matrix& gram, std::span<const int> labels,
                        const RiskParams& params) {
  validate(params);
  const auto g = kernel_scores(gamma1, gamma2, gram, labels);
  return risk_from_scores(g, gamma1, gamma2, b, rho, labels, params);
}

double majorizer_value(const DCState& at, const DCState& anchor, const Matrix& gram,
                       std::span<const int> labels, const RiskParams& params) {
  validate(params);
  const auto g_at = kernel_scores(at.gamma1, at.gamma2, gram, labels);
  const auto m_at = margins_of(at.gamma1, at.gamma2, at.b, gram, labels);
  const auto m_anchor = margins_of(anchor.gamma1, anchor.gamma2, anchor.b, gram, labels);
  const auto convex_at = empirical_r1_r2(m_at, at.rho, params).convex;
  const auto concave_anchor = empirical_r1_r2(m_anchor, anchor.rho, params).concave;
  const auto beta = compute_betas(m_anchor, anchor.rho, params);
  const double d_rho = at.rho - anchor.rho;
  double linear = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const double d_margin = m_at[n] - m_anchor[n];
    linear += beta.beta1[n] * (d_margin - d_rho) + beta.beta2[n] * (d_margin + d_rho);
  }
  const double r1 = 0.5 * weight_norm_sq(g_at, at.gamma1, at.gamma2, labels) + convex_at;
  return r1 - concave_anchor + linear;
}

std::string to_string(MarginCategory category) {
  switch (category) {
    case MarginCategory::kBeyondOuter: return "beyond-outer";
    case MarginCategory::kOnOuter: return "on-outer";
    case MarginCategory::kOuterRamp: return "outer-ramp";
    case MarginCategory::kPlateau: return "plateau";
    case MarginCategory::kOnInner: return "on-inner";
    case MarginCategory::kInnerRamp: return "inner-ramp";
    case MarginCategory::kFarMisclassified: return "far-misclassified";
  }
  return "unknown";
}

MarginCategory classify_margin(double margin, double rho, double mu, double tol) {
  const double mu2 = mu * mu;
  if (std::abs(margin - (rho + mu)) <= tol) return MarginCategory::kOnOuter;
  if (margin > rho + mu) return MarginCategory::kBeyondOuter;
  if (std::abs(margin - (-rho + mu)) <= tol) return MarginCategory::kOnInner;
  if (margin >= rho - mu2 && margin > -rho + mu) return MarginCategory::kOuterRamp;
  if (margin > -rho + mu) return MarginCategory::kPlateau;
  if (margin >= -rho - mu2) return MarginCategory::kInnerRamp;
  return MarginCategory::kFarMisclassified;
}

std::string to_string(BiasRhoSource source) {
  switch (source) {
    case BiasRhoSource::kSolved: return "solved";
    case BiasRhoSource::kBiasOnly: return "bias-only";
    case BiasRhoSource::kPrevious: return "previous";
  }
  return "unknown";
}

BiasRho solve_sv_equations(std::span<const SvEquation> sv1, std::span<const SvEquation> sv2,
                           double mu, double prev_b, double prev_rho) {
  // Row (y, sigma) . (b, rho) = mu - y g with sigma = -1 for SV1, +1 for SV2.
  struct Row {
    double y, sigma, target;
  };
  std::vector<Row> rows;
  for (const auto& e : sv1) rows.push_back({double(e.label), -1.0, mu - e.label * e.g});
  for (const auto& e : sv2) rows.push_back({double(e.label), 1.0, mu - e.label * e.g});

  BiasRho out;
  if (rows.empty()) {
    out.b = prev_b;
    out.rho = prev_rho;
    out.source = BiasRhoSource::kPrevious;
    return out;
  }
  // Rows (1,-1) and (-1,1) pin b - rho; (1,1) and (-1,-1) pin b + rho.
  bool pins_u = false;
  bool pins_v = false;
  for (const auto& r : rows) (r.y * r.sigma < 0 ? pins_u : pins_v) = true;
  if (pins_u && pins_v) {
    double a00 = 0, a01 = 0, a11 = 0, r0 = 0, r1 = 0;
    for (const auto& r : rows) {
      a00 += r.y * r.y;
      a01 += r.y * r.sigma;
      a11 += r.sigma * r.sigma;
      r0 += r.y * r.target;
      r1 += r.sigma * r.target;
    }
    const double det = a00 * a11 - a01 * a01;
    out.b = (a11 * r0 - a01 * r1) / det;
    out.rho = (a00 * r1 - a01 * r0) / det;
    out.source = BiasRhoSource::kSolved;
    return out;
  }
  double acc = 0.0;
  for (const auto& r : rows) acc += r.y * (r.target - r.sigma * prev_rho);
  out.b = acc / static_cast<double>(rows.size());
  out.rho = prev_rho;
  out.source = BiasRhoSource::kBiasOnly;
  return out;
}

BiasRho recover_bias_rho(const DualSolution& solution, const DualSubproblem& sub, double prev_b,
                         double prev_rho, double sv_tol) {
  const std::size_t n = sub.size();
  const auto g = kernel_scores(solution.gamma1, solution.gamma2, *sub.gram, sub.labels);
  SupportVectorSets sets;
  std::vector<SvEquation> eq1;
  std::vector<SvEquation> eq2;
  auto interior = [sv_tol](double v, double lo, double hi) {
    const double margin = sv_tol * (hi - lo);
    return hi > lo && v > lo + margin && v < hi - margin;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (interior(solution.gamma1[i], sub.lower1[i], sub.upper1[i])) {
      sets.sv1.push_back(i);
      eq1.push_back({sub.labels[i], g[i]});
    }
    if (interior(solution.gamma2[i], sub.lower2[i], sub.upper2[i])) {
      sets.sv2.push_back(i);
      eq2.push_back({sub.labels[i], g[i]});
    }
  }
  BiasRho out = solve_sv_equations(eq1, eq2, sub.mu, prev_b, prev_rho);
  sets.categories.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double margin = sub.labels[i] * (g[i] + out.b);
    sets.categories.push_back(classify_margin(margin, out.rho, sub.mu, 1e-6));
  }
  out.sets = std::move(sets);
  return out;
}

BiasRhoRegion optimal_bias_rho_region(std::span<const double> g, std::span<const int> labels,
                                      std::span<const double> beta1,
                                      std::span<const double> beta2, const RiskParams& params) {
  const double mu = params.mu;
  const double w1 = params.C * params.d / mu;
  const double w2 = params.C * (1.0 - params.d) / mu;
  // u = b - rho collects d[mu - g - u]_+ (y=+1) and (1-d)[mu + g + u]_+ (y=-1);
  // v = b + rho collects (1-d)[mu - g - v]_+ (y=+1) and d[mu + g + v]_+ (y=-1).
  std::vector<Hinge> u_dec, u_inc, v_dec, v_inc;
  double u_slope = 0.0;
  double v_slope = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] > 0) {
      u_dec.push_back({mu - g[n], w1});
      v_dec.push_back({mu - g[n], w2});
      u_slope += beta1[n];
      v_slope += beta2[n];
    } else {
      u_inc.push_back({-mu - g[n], w2});
      v_inc.push_back({-mu - g[n], w1});
      u_slope -= beta2[n];
      v_slope -= beta1[n];
    }
  }
  const auto [u_lo, u_hi] = minimize_piecewise_linear(std::move(u_dec), std::move(u_inc), u_slope);
  const auto [v_lo, v_hi] = minimize_piecewise_linear(std::move(v_dec), std::move(v_inc), v_slope);
  return {u_lo, u_hi, v_lo, v_hi};
}

std::pair<double, double> project_bias_rho(double b, double rho, const BiasRhoRegion& region) {
  const double u = std::clamp(b - rho, region.u_lo, region.u_hi);
  const double v = std::clamp(b + rho, region.v_lo, region.v_hi);
  return {0.5 * (u + v), 0.5 * (v - u)};
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kConverged: return "converged";
    case StopReason::kRiskStalled: return "risk-stalled";
    case StopReason::kNoDescent: return "no-descent";
    case StopReason::kMaxIterations: return "max-iterations";
    case StopReason::kNotRun: return "not-run";
  }
  return "unknown";
}

TrainResult train(const Dataset& data, const Hyperparams& hyper, std::optional<InitialGuess> init) {
  validate(hyper);
  validate(data, /*require_both_classes=*/true);
  if (data.size() < 2) throw DegenerateData("training needs at least two samples");
  const RiskParams params = hyper.risk();
  const std::size_t n = data.size();
  const std::vector<int>& y = data.y;
  const InitialGuess start = init.value_or(InitialGuess{});
  if (!std::isfinite(start.b) || !std::isfinite(start.rho)) {
    throw InvalidArgument("initial b and rho must be finite");
  }

  GramPtr gram = make_gram(hyper.kernel, data.X);
  DCState state = DCState::zero(n, start.b, start.rho);
  std::vector<double> g(n, 0.0);
  std::vector<double> margins(n);
  for (std::size_t i = 0; i < n; ++i) margins[i] = y[i] * (g[i] + state.b);
  {
    auto beta = compute_betas(margins, state.rho, params);
    state.beta1 = std::move(beta.beta1);
    state.beta2 = std::move(beta.beta2);
  }
  double risk = risk_from_scores(g, state.gamma1, state.gamma2, state.b, state.rho, y, params);
  state.risk_history.push_back(risk);

  std::vector<IterationRecord> trace;
  StopReason stop = hyper.dc_max_iter == 0 ? StopReason::kNotRun : StopReason::kMaxIterations;
  int stalled = 0;
  SolverOptions solver;
  solver.tol = hyper.qp_tol;
  solver.max_iter = hyper.qp_max_iter;

  for (std::size_t l = 0; l < hyper.dc_max_iter; ++l) {
    // state.beta* hold the weights computed from the current iterate.
    DualSubproblem sub = make_subproblem(gram, y, params, state.beta1, state.beta2);
    auto warm = repair_warm_start(state, sub);
    DualSolution sol = solve_dual(sub, solver, warm);

    BiasRho recovered;
    std::vector<double> g_new;
    double b_new = 0.0, rho_new = 0.0, risk_new = 0.0;
    const auto evaluate_candidate = [&] {
      recovered = recover_bias_rho(sol, sub, state.b, state.rho, hyper.sv_tol);
      g_new = kernel_scores(sol.gamma1, sol.gamma2, *gram, y);
      const auto region = optimal_bias_rho_region(g_new, y, state.beta1, state.beta2, params);
      std::tie(b_new, rho_new) = project_bias_rho(recovered.b, recovered.rho, region);
      risk_new = risk_from_scores(g_new, sol.gamma1, sol.gamma2, b_new, rho_new, y, params);
    };
    const double slack = std::min(kRoundoffSlack * std::max(1.0, std::abs(risk)), 5e-9);
    evaluate_candidate();
    bool retried = false;
    if (risk_new > risk + slack && solver.tol > kRetryTol) {
      // Re-solve once from the loose solution at a tighter tolerance.
      SolverOptions tight = solver;
      tight.tol = std::max(solver.tol * 1e-4, kRetryTol);
      const std::size_t loose_iterations = sol.iterations;
      sol = solve_dual(sub, tight, DualPoint{sol.gamma1, sol.gamma2});
      sol.iterations += loose_iterations;
      evaluate_candidate();
      retried = true;
    }

    IterationRecord record;
    record.iteration = l + 1;
    record.risk = risk_new;
    record.b = b_new;
    record.rho = rho_new;
    record.qp_iterations = sol.iterations;
    record.qp_residual = sol.kkt_residual;
    record.qp_converged = sol.converged;
    record.sv1 = recovered.sets.sv1.size();
    record.sv2 = recovered.sets.sv2.size();
    record.source = recovered.source;
    record.projection_shift =
        std::max(std::abs(b_new - recovered.b), std::abs(rho_new - recovered.rho));
    record.change = std::max({std::abs(b_new - state.b), std::abs(rho_new - state.rho),
                              sup_change(sol.gamma1, state.gamma1),
                              sup_change(sol.gamma2, state.gamma2)});
    record.tightened = retried;
    trace.push_back(record);

    if (risk_new > risk + slack) {
      // The bound was not decreased even after tightening; keep the iterate.
      stop = StopReason::kNoDescent;
      break;
    }

    const double decrease = std::max(0.0, risk - risk_new);
    state.gamma1 = std::move(sol.gamma1);
    state.gamma2 = std::move(sol.gamma2);
    state.b = b_new;
    state.rho = rho_new;
    state.iteration = l + 1;
    state.risk_history.push_back(risk_new);
    risk = risk_new;
    g = g_new;
    for (std::size_t i = 0; i < n; ++i) margins[i] = y[i] * (g[i] + state.b);
    auto beta = compute_betas(margins, state.rho, params);
    state.beta1 = std::move(beta.beta1);
    state.beta2 = std::move(beta.beta2);

    if (record.change <= hyper.dc_tol) {
      stop = StopReason::kConverged;
      break;
    }
    stalled = decrease < kStallDecrease ? stalled + 1 : 0;
    if (stalled >= kStallRounds) {
      stop = StopReason::kRiskStalled;
      break;
    }
  }

  Diagnostics diag;
  diag.dc_iterations = state.iteration;
  diag.final_risk = risk;
  diag.converged = stop != StopReason::kMaxIterations;
  diag.stop_reason = to_string(stop);

  TrainResult result{build_model(data, hyper, state, Standardization::identity(data.dim()), diag),
                     std::move(state),
                     std::move(trace),
                     stop,
                     diag.converged,
                     std::move(gram)};
  return result;
}

TrainResult fit(const Dataset& data, const Hyperparams& hyper, bool standardize,
                std::optional<InitialGuess> init) {
  if (!standardize) return train(data, hyper, init);
  validate(data, /*require_both_classes=*/true);
  const Standardization params = standardize_fit(data);
  Dataset scaled = data;
  scaled.X = standardize_apply(params, data.X);
  TrainResult result = train(scaled, hyper, init);
  const Model& m = result.model;
  result.model = Model(m.kernel(), m.support(), m.bias(), m.rho(), params, m.hyper(),
                       m.diagnostics());
  return result;
}

ConformanceReport check_conformance(const DCState& state, const Matrix& gram,
                                    std::span<const int> labels, const Hyperparams& hyper,
                                    double rel_tol, double margin_tol) {
  const RiskParams params = hyper.risk();
  const double mu = params.mu;
  const double mu2 = mu * mu;
  const double rho = state.rho;
  const double w1 = params.C * params.d / mu;
  const double w2 = params.C * (1.0 - params.d) / mu;
  const auto margins = margins_of(state.gamma1, state.gamma2, state.b, gram, labels);

  // Distance of v to [lo, hi].
  auto gap = [](double v, double lo, double hi) {
    return v < lo ? lo - v : (v > hi ? v - hi : 0.0);
  };
  // Prescribed set for one coordinate from the optimality conditions:
  // at its lower bound when the reduced gradient is positive, at the upper
  // bound when negative, anywhere when zero. The bound shift beta depends
  // on a threshold that is ambiguous within margin_tol.
  auto kkt_deviation = [&](double value, double reduced, double beta_arg, double width) {
    std::vector<double> betas;
    if (beta_arg < -mu2 - margin_tol) {
      betas = {width};
    } else if (beta_arg > -mu2 + margin_tol) {
      betas = {0.0};
    } else {
      betas = {0.0, width};
    }
    double best = kInf;
    for (const double beta : betas) {
      const double lo = -beta;
      const double hi = width - beta;
      double dev;
      if (reduced > margin_tol) {
        dev = std::abs(value - lo);
      } else if (reduced < -margin_tol) {
        dev = std::abs(value - hi);
      } else {
        dev = gap(value, lo, hi);
      }
      best = std::min(best, dev);
    }
    return width > 0.0 ? best / width : best;
  };

  struct Cell {
    double lo, hi;            // margin interval
    double g1_lo, g1_hi;      // allowed gamma1
    double g2_lo, g2_hi;      // allowed gamma2
  };
  const std::vector<Cell> table = {
      {rho + mu, kInf, 0, 0, 0, 0},
      {rho + mu, rho + mu, 0, w1, 0, 0},
      {rho - mu2, rho + mu, w1, w1, 0, 0},
      {-rho + mu, rho - mu2, 0, 0, 0, 0},
      {-rho + mu, -rho + mu, 0, 0, 0, w2},
      {-rho - mu2, -rho + mu, 0, 0, w2, w2},
      {-kInf, -rho - mu2, 0, 0, 0, 0},
  };

  ConformanceReport report;
  report.samples = labels.size();
  report.table_applicable = (rho - mu2) - (-rho + mu) >= 2.0 * margin_tol;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const double m = margins[n];
    const double g1 = state.gamma1[n];
    const double g2 = state.gamma2[n];
    const double dev1 = kkt_deviation(g1, m - mu - rho, m - rho, w1);
    const double dev2 = kkt_deviation(g2, m - mu + rho, m + rho, w2);
    report.max_kkt_deviation = std::max({report.max_kkt_deviation, dev1, dev2});
    if (dev1 > rel_tol || dev2 > rel_tol) ++report.kkt_violations;

    const double s = g1 + g2;
    if (std::abs(s) > kPruneThreshold) {
      const bool outer = m >= rho - mu2 - margin_tol && m <= rho + mu + margin_tol;
      const bool inner = m >= -rho - mu2 - margin_tol && m <= -rho + mu + margin_tol;
      if (!outer && !inner) ++report.support_outside_bands;
    }

    if (!report.table_applicable) continue;
    ++report.table_checked;
    bool matched = false;
    for (const auto& cell : table) {
      if (m < cell.lo - margin_tol || m > cell.hi + margin_tol) continue;
      if (gap(g1, cell.g1_lo, cell.g1_hi) <= rel_tol * w1 &&
          gap(g2, cell.g2_lo, cell.g2_hi) <= rel_tol * w2) {
        matched = true;
        break;
      }
    }
    if (!matched) ++report.table_violations;
    if (std::abs(g1) > rel_tol * w1 && std::abs(g2) > rel_tol * w2) ++report.both_nonzero;
  }
  return report;
}

}  // namespace droc
