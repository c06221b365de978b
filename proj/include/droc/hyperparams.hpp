#pragma once

#include <cstddef>

#include "droc/kernels.hpp"
#include "droc/losses.hpp"

namespace droc {

/// Training configuration. C, d and mu shape the risk; the rest controls
/// the DC outer loop and the dual solver.
struct Hyperparams {
  double C = 1.0;
  double d = 0.2;
  double mu = 1.0;
  KernelSpec kernel = KernelSpec::linear();
  std::size_t dc_max_iter = 50;
  double dc_tol = 1e-4;
  double qp_tol = 1e-6;
  /// Relative interiority margin (fraction of the box width) for SV sets.
  double sv_tol = 1e-4;
  /// Pair updates per dual solve; 0 picks the solver default.
  std::size_t qp_max_iter = 0;

  RiskParams risk() const { return {C, d, mu}; }
};

/// Throws InvalidArgument when a field is out of range.
void validate(const Hyperparams& hyper);

}  // namespace droc
