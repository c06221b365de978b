#include "droc/losses.hpp"

#include <cmath>
#include <string>

#include "droc/error.hpp"

namespace droc {

namespace {

void check_d(double d) {
  if (!(d > 0.0 && d <= 0.5)) {
    throw InvalidArgument("rejection cost d must lie in (0, 0.5], got " + std::to_string(d));
  }
}

void check_mu(double mu) {
  if (!(mu > 0.0 && mu <= 1.0)) {
    throw InvalidArgument("ramp slope mu must lie in (0, 1], got " + std::to_string(mu));
  }
}

double hinge(double a) { return a > 0.0 ? a : 0.0; }

}  // namespace

LossInputs::LossInputs(double margin_, double rho_, double d_, double mu_)
    : margin(margin_), rho(rho_), d(d_), mu(mu_) {
  if (!std::isfinite(margin)) throw InvalidArgument("margin must be finite");
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw InvalidArgument("rejection bandwidth rho must be finite and >= 0");
  }
  check_d(d);
  check_mu(mu);
}

void validate(const RiskParams& params) {
  if (!(params.C > 0.0) || !std::isfinite(params.C)) {
    throw InvalidArgument("regularization C must be positive and finite");
  }
  check_d(params.d);
  check_mu(params.mu);
}

double loss_0d1(const LossInputs& in) { return detail::zero_d_one(in.margin, in.rho, in.d); }

double loss_double_ramp(const LossInputs& in) {
  return detail::double_ramp(in.margin, in.rho, in.d, in.mu);
}

double loss_ramp(double t, double mu) {
  check_mu(mu);
  return detail::unit_ramp(t, mu);
}

double loss_generalized_hinge(double margin, double d) {
  check_d(d);
  if (margin < 0.0) return 1.0 - ((1.0 - d) / d) * margin;
  if (margin < 1.0) return 1.0 - margin;
  return 0.0;
}

double binary_entropy(double d) {
  if (!(d > 0.0 && d < 1.0)) {
    throw InvalidArgument("binary entropy is defined on (0, 1), got " + std::to_string(d));
  }
  return -d * std::log(d) - (1.0 - d) * std::log1p(-d);
}

double loss_double_hinge(double margin, double d) {
  check_d(d);
  const double h = binary_entropy(d);
  return std::max({-(1.0 - d) * margin + h, -d * margin + h, 0.0});
}

RiskDecomposition empirical_r1_r2(std::span<const double> margins, double rho,
                                  const RiskParams& params) {
  validate(params);
  const double mu = params.mu;
  const double d = params.d;
  double convex = 0.0;
  double concave = 0.0;
  for (const double m : margins) {
    convex += d * hinge(mu - m + rho) + (1.0 - d) * hinge(mu - m - rho);
    concave += d * hinge(-mu * mu - m + rho) + (1.0 - d) * hinge(-mu * mu - m - rho);
  }
  const double scale = params.C / mu;
  return {scale * convex, scale * concave};
}

double empirical_double_ramp(std::span<const double> margins, double rho,
                             const RiskParams& params) {
  double total = 0.0;
  for (const double m : margins) total += detail::double_ramp(m, rho, params.d, params.mu);
  return params.C * total;
}

}  // namespace droc
