#include "droc/kernels.hpp"

#include <cmath>

#include "droc/error.hpp"

namespace droc {

void Matrix::push_row(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw DimensionMismatch("row has " + std::to_string(values.size()) + " values, expected " +
                            std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

KernelSpec KernelSpec::rbf(double gamma) {
  KernelSpec spec{KernelKind::kRbf, gamma};
  validate(spec);
  return spec;
}

void validate(const KernelSpec& spec) {
  if (spec.kind == KernelKind::kRbf && !(spec.gamma > 0.0 && std::isfinite(spec.gamma))) {
    throw InvalidArgument("RBF kernel requires gamma > 0");
  }
}

std::string to_string(KernelKind kind) { return kind == KernelKind::kRbf ? "rbf" : "linear"; }

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "linear") return KernelKind::kLinear;
  if (name == "rbf") return KernelKind::kRbf;
  throw InvalidArgument("unknown kernel '" + name + "' (expected linear or rbf)");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

double eval_unchecked(const KernelSpec& spec, std::span<const double> x,
                      std::span<const double> x2) {
  if (spec.kind == KernelKind::kLinear) return dot(x, x2);
  return std::exp(-spec.gamma * squared_distance(x, x2));
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> x2) {
  if (x.size() != x2.size()) {
    throw DimensionMismatch("kernel arguments have dimensions " + std::to_string(x.size()) +
                            " and " + std::to_string(x2.size()));
  }
  return eval_unchecked(spec, x, x2);
}

Matrix gram_matrix(const KernelSpec& spec, const Matrix& X) {
  validate(spec);
  const std::size_t n = X.rows();
  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = X.row(i);
    for (std::size_t j = i; j < n; ++j) {
      const double k = eval_unchecked(spec, xi, X.row(j));
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  return gram;
}

}  // namespace droc
