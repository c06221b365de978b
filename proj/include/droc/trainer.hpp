#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "droc/data.hpp"
#include "droc/hyperparams.hpp"
#include "droc/kernels.hpp"
#include "droc/model.hpp"
#include "droc/qp.hpp"

namespace droc {

/// Iterate of the DC loop. The weight vector is implicit:
/// w = sum_n y_n (gamma1_n + gamma2_n) phi(x_n).
struct DCState {
  std::vector<double> gamma1;
  std::vector<double> gamma2;
  std::vector<double> beta1;
  std::vector<double> beta2;
  double b = 0.0;
  double rho = 0.0;
  std::size_t iteration = 0;
  std::vector<double> risk_history;

  static DCState zero(std::size_t n, double b = 0.0, double rho = 0.0);
};

/// Subgradient weights of the concave part at the current margins:
///   beta1_n = (Cd/mu)     [margin_n - rho < -mu^2]
///   beta2_n = (C(1-d)/mu) [margin_n + rho < -mu^2]
struct BetaWeights {
  std::vector<double> beta1;
  std::vector<double> beta2;
};
BetaWeights compute_betas(std::span<const double> margins, double rho, const RiskParams& params);

/// f(x_n) = sum_m y_m (gamma1_m + gamma2_m) K(m, n) + b.
std::vector<double> decision_values(std::span<const double> gamma1, std::span<const double> gamma2,
                                    double b, const Matrix& gram, std::span<const int> labels);

/// y_n f(x_n).
std::vector<double> margins_of(std::span<const double> gamma1, std::span<const double> gamma2,
                               double b, const Matrix& gram, std::span<const int> labels);

/// 1/2 |w|^2 + C sum_n L_DR(y_n f(x_n), rho).
double regularized_risk(std::span<const double> gamma1, std::span<const double> gamma2, double b,
                        double rho, const Matrix& gram, std::span<const int> labels,
                        const RiskParams& params);

/// Convex upper bound of the risk built at `anchor`:
///   R1(at) - R2(anchor) - (at - anchor)' grad R2(anchor)
/// with the subgradient picked by compute_betas at the anchor. Equal to the
/// risk when at == anchor and never below it.
double majorizer_value(const DCState& at, const DCState& anchor, const Matrix& gram,
                       std::span<const int> labels, const RiskParams& params);

/// Margin regions of the support-vector behaviour table at convergence.
enum class MarginCategory {
  kBeyondOuter,     // (rho + mu, inf)
  kOnOuter,         // = rho + mu
  kOuterRamp,       // [rho - mu^2, rho + mu)
  kPlateau,         // (-rho + mu, rho - mu^2)
  kOnInner,         // = -rho + mu
  kInnerRamp,       // [-rho - mu^2, -rho + mu)
  kFarMisclassified // (-inf, -rho - mu^2)
};

std::string to_string(MarginCategory category);

/// Category of a margin; margins within `tol` of rho + mu or -rho + mu are
/// reported as on the hyperplane.
MarginCategory classify_margin(double margin, double rho, double mu, double tol);

struct SupportVectorSets {
  std::vector<std::size_t> sv1;  // gamma1 strictly inside its box
  std::vector<std::size_t> sv2;  // gamma2 strictly inside its box
  std::vector<MarginCategory> categories;
};

enum class BiasRhoSource {
  kSolved,     // full-rank least squares on the SV equations
  kBiasOnly,   // rank one: rho held, b fitted
  kPrevious    // no SV equations: previous values kept
};

std::string to_string(BiasRhoSource source);

/// One SV equation: sample label and g = sum_m y_m s_m K(m, n).
struct SvEquation {
  int label;
  double g;
};

struct BiasRho {
  double b = 0.0;
  double rho = 0.0;
  BiasRhoSource source = BiasRhoSource::kPrevious;
  SupportVectorSets sets;
};

/// Least-squares solution of
///   y_n b - rho = mu - y_n g_n  (n in SV1),   y_n b + rho = mu - y_n g_n  (n in SV2)
/// with the documented fallbacks for rank-deficient or empty systems.
BiasRho solve_sv_equations(std::span<const SvEquation> sv1, std::span<const SvEquation> sv2,
                           double mu, double prev_b, double prev_rho);

/// Builds the SV sets from a dual solution (interior by sv_tol times the
/// box width) and solves them for b and rho.
BiasRho recover_bias_rho(const DualSolution& solution, const DualSubproblem& sub, double prev_b,
                         double prev_rho, double sv_tol);

/// Exact minimizers of the majorizer over (b, rho) for a fixed weight
/// vector. In u = b - rho and v = b + rho the problem separates into two
/// one-dimensional convex piecewise-linear problems; each returns its
/// closed minimizing interval (endpoints may be infinite).
struct BiasRhoRegion {
  double u_lo, u_hi;
  double v_lo, v_hi;
};
BiasRhoRegion optimal_bias_rho_region(std::span<const double> g, std::span<const int> labels,
                                      std::span<const double> beta1,
                                      std::span<const double> beta2, const RiskParams& params);

/// Moves (b, rho) to the nearest point of the region, coordinatewise in (u, v).
std::pair<double, double> project_bias_rho(double b, double rho, const BiasRhoRegion& region);

enum class StopReason { kConverged, kRiskStalled, kNoDescent, kMaxIterations, kNotRun };
std::string to_string(StopReason reason);

struct IterationRecord {
  std::size_t iteration = 0;
  double risk = 0.0;
  double b = 0.0;
  double rho = 0.0;
  double change = 0.0;
  std::size_t qp_iterations = 0;
  double qp_residual = 0.0;
  bool qp_converged = false;
  std::size_t sv1 = 0;
  std::size_t sv2 = 0;
  BiasRhoSource source = BiasRhoSource::kPrevious;
  /// Distance (b, rho) moved to reach the exact minimizer of the bound.
  double projection_shift = 0.0;
  /// Subproblem re-solved at a tighter tolerance after a failed descent check.
  bool tightened = false;
};

struct InitialGuess {
  double b = 0.0;
  double rho = 0.0;
};

struct TrainResult {
  Model model;
  DCState state;
  std::vector<IterationRecord> trace;
  StopReason stop = StopReason::kNotRun;
  bool converged = false;
  /// Training Gram matrix, kept for diagnostics.
  GramPtr gram;
};

/// DC training loop on the features as given (no standardization; the
/// model stores an identity transform). Throws DegenerateData for a
/// single-class set and NonFiniteInput for NaN/Inf features.
TrainResult train(const Dataset& data, const Hyperparams& hyper,
                  std::optional<InitialGuess> init = std::nullopt);

/// Fits standardization on `data`, trains on the standardized features and
/// stores the transform in the model so it predicts on raw inputs.
TrainResult fit(const Dataset& data, const Hyperparams& hyper, bool standardize = true,
                std::optional<InitialGuess> init = std::nullopt);

/// Agreement of a converged state with the support-vector behaviour table.
struct ConformanceReport {
  std::size_t samples = 0;
  /// Coordinates away from the cell prescribed by the dual optimality
  /// conditions (bounds shifted by beta).
  std::size_t kkt_violations = 0;
  double max_kkt_deviation = 0.0;  // relative to box width
  /// Samples checked against the beta-free table (only when its rows are
  /// disjoint, i.e. rho - mu^2 >= -rho + mu).
  std::size_t table_checked = 0;
  std::size_t table_violations = 0;
  std::size_t both_nonzero = 0;
  bool table_applicable = false;
  /// Retained coefficients whose margin lies outside the support bands.
  std::size_t support_outside_bands = 0;
};

ConformanceReport check_conformance(const DCState& state, const Matrix& gram,
                                    std::span<const int> labels, const Hyperparams& hyper,
                                    double rel_tol = 1e-4, double margin_tol = 1e-4);

}  // namespace droc
