#pragma once

#include <algorithm>
#include <span>

namespace droc {

/// Loss arguments: margin y*f(x), rejection bandwidth rho, rejection cost d
/// and ramp slope mu. The constructor enforces rho >= 0, 0 < d <= 0.5 and
/// 0 < mu <= 1; violations throw InvalidArgument.
struct LossInputs {
  LossInputs(double margin, double rho, double d, double mu);

  double margin;
  double rho;
  double d;
  double mu;
};

/// Shape parameters of the regularized risk: trade-off C, cost d, slope mu.
struct RiskParams {
  double C;
  double d;
  double mu;
};

namespace detail {

/// (1/mu)([mu - t]_+ - [-mu^2 - t]_+), written as a clamp so that the
/// saturated value is exactly 1 + mu.
inline double unit_ramp(double t, double mu) {
  return std::clamp((mu - t) / mu, 0.0, 1.0 + mu);
}

/// Unchecked double ramp loss. The inner form r2 + d (r1 - r2) equals
/// d r1 + (1 - d) r2 and is exact at rho = 0 and on the plateaus.
inline double double_ramp(double margin, double rho, double d, double mu) {
  const double outer = unit_ramp(margin - rho, mu);
  const double inner = unit_ramp(margin + rho, mu);
  return inner + d * (outer - inner);
}

inline double zero_d_one(double margin, double rho, double d) {
  if (margin < -rho) return 1.0;
  if (margin <= rho) return d;
  return 0.0;
}

}  // namespace detail

/// 0-d-1 loss: 1 when margin < -rho, d when |margin| <= rho, else 0.
double loss_0d1(const LossInputs& in);

/// Double ramp loss, a continuous nonconvex upper bound of the 0-d-1 loss.
double loss_double_ramp(const LossInputs& in);

/// mu-ramp loss (1/mu)([mu - t]_+ - [-mu^2 - t]_+). Non-increasing in t.
double loss_ramp(double t, double mu);

/// Generalized hinge surrogate. d in (0, 0.5].
double loss_generalized_hinge(double margin, double d);

/// Double hinge surrogate max(-(1-d)m + H(d), -d m + H(d), 0). d in (0, 0.5].
double loss_double_hinge(double margin, double d);

/// Natural-log binary entropy. Throws InvalidArgument outside (0, 1).
double binary_entropy(double d);

/// Data terms of the convex decomposition of the empirical risk.
///   convex  = (C/mu) sum d[mu - m + rho]_+ + (1-d)[mu - m - rho]_+
///   concave = (C/mu) sum d[-mu^2 - m + rho]_+ + (1-d)[-mu^2 - m - rho]_+
/// convex - concave = C sum loss_double_ramp(m).
struct RiskDecomposition {
  double convex;
  double concave;
};

RiskDecomposition empirical_r1_r2(std::span<const double> margins, double rho,
                                  const RiskParams& params);

/// C * sum of double ramp losses over the margins.
double empirical_double_ramp(std::span<const double> margins, double rho,
                             const RiskParams& params);

/// Throws InvalidArgument unless C > 0, 0 < d <= 0.5, 0 < mu <= 1.
void validate(const RiskParams& params);

}  // namespace droc
