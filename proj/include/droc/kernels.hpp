#pragma once

#include <memory>
#include <span>
#include <string>

#include "droc/matrix.hpp"

namespace droc {

enum class KernelKind { kLinear, kRbf };

/// Kernel choice. RBF is exp(-gamma * |x - x'|^2); gamma is ignored for
/// the linear kernel.
struct KernelSpec {
  KernelKind kind = KernelKind::kLinear;
  double gamma = 1.0;

  static KernelSpec linear() { return {KernelKind::kLinear, 1.0}; }
  static KernelSpec rbf(double gamma);
};

/// Throws InvalidArgument when an RBF spec has gamma <= 0.
void validate(const KernelSpec& spec);

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);

/// k(x, x2). Throws DimensionMismatch if the lengths differ.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> x2);

/// Dense Gram matrix over the rows of X. Each entry is computed once for
/// n <= m and mirrored, so the result is exactly symmetric.
Matrix gram_matrix(const KernelSpec& spec, const Matrix& X);

using GramPtr = std::shared_ptr<const Matrix>;

inline GramPtr make_gram(const KernelSpec& spec, const Matrix& X) {
  return std::make_shared<const Matrix>(gram_matrix(spec, X));
}

}  // namespace droc
