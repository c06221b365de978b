#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "droc/data.hpp"
#include "droc/hyperparams.hpp"
#include "droc/kernels.hpp"

namespace droc {

struct SupportVector {
  std::vector<double> x;  // standardized coordinates
  double coeff;           // y_n (gamma1_n + gamma2_n)
};

struct Diagnostics {
  std::size_t dc_iterations = 0;
  double final_risk = 0.0;
  bool converged = false;
  std::string stop_reason;
  std::uint64_t seed = 0;
};

/// Reject-option classifier f(x) = sum_i coeff_i k(x_i, x) + b with
/// rejection band |f| <= rho. Immutable once built.
class Model {
 public:
  /// Validates the pieces. rho in [-1e-6, 0) is clamped to 0; anything
  /// more negative throws ModelIOError(kIntegrity).
  Model(KernelSpec kernel, std::vector<SupportVector> support, double b, double rho,
        Standardization standardization, Hyperparams hyper, Diagnostics diagnostics = {});

  const KernelSpec& kernel() const { return kernel_; }
  const std::vector<SupportVector>& support() const { return support_; }
  double bias() const { return b_; }
  double rho() const { return rho_; }
  const Standardization& standardization() const { return standardization_; }
  const Hyperparams& hyper() const { return hyper_; }
  const Diagnostics& diagnostics() const { return diagnostics_; }
  std::size_t dim() const { return standardization_.mean.size(); }

  /// f(x) for a raw (unstandardized) input. Throws DimensionMismatch.
  double decision_function(std::span<const double> x) const;

  /// +1 if f > rho, -1 if f < -rho, 0 (reject) otherwise.
  int predict(std::span<const double> x) const;

  /// f(x) for an input already in standardized coordinates.
  double decision_function_standardized(std::span<const double> z) const;

 private:
  KernelSpec kernel_;
  std::vector<SupportVector> support_;
  double b_;
  double rho_;
  Standardization standardization_;
  Hyperparams hyper_;
  Diagnostics diagnostics_;
};

/// Reject-option decision for a score: sign outside [-rho, rho], 0 inside.
int reject_option_label(double f, double rho);

inline constexpr int kModelSchemaVersion = 1;

/// Serializes to the versioned JSON model document.
std::string to_json_string(const Model& model);
Model model_from_json_string(const std::string& text);

/// Atomic write (temp file + rename).
void save(const Model& model, const std::filesystem::path& path);
Model load(const std::filesystem::path& path);

}  // namespace droc
