#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "droc/matrix.hpp"

namespace droc {

/// Labeled samples: one row of X per sample, labels in {-1, +1}.
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::string name;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return X.cols(); }
  std::size_t count(int label) const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Throws NonFiniteInput / DimensionMismatch / InvalidArgument on malformed
/// data. With require_both_classes, a single-class set raises DegenerateData.
void validate(const Dataset& data, bool require_both_classes);

struct CsvOptions {
  /// Zero-based label column; negative counts from the end (-1 = last).
  int label_column = -1;
  bool has_header = false;
};

/// Reads a comma-separated file. Labels {0, 1} are remapped to {-1, +1}.
/// Notes about remapping or a single class go to `notes` when given.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {},
                 std::vector<std::string>* notes = nullptr);

/// Reads a CSV of features only (no label column). Used for prediction.
Matrix load_feature_csv(const std::filesystem::path& path, bool has_header = false);

/// Reads the sparse "label idx:val ..." format with 1-based indices.
Dataset load_libsvm(const std::filesystem::path& path);

/// Writes features then label, full round-trip precision. Optional header.
void write_csv(const Dataset& data, const std::filesystem::path& path, bool header = true);

/// Per-feature z-score parameters. Zero-variance features get scale 1.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  bool empty() const { return mean.empty(); }
  static Standardization identity(std::size_t dim);
};

Standardization standardize_fit(const Dataset& train);
Matrix standardize_apply(const Standardization& params, const Matrix& X);
void standardize_apply_inplace(const Standardization& params, std::span<double> x);

// ---------------------------------------------------------------------------
// Synthetic generators. All are pure functions of the seed.

/// Two uniform-box mixtures, 150 draws each, labeled by the sign of x1,
/// then exactly 30 labels flipped.
struct Synth1Result {
  Dataset data;
  std::vector<std::size_t> flipped;
};
Synth1Result gen_synth1(std::uint64_t seed);

/// Ten Gaussian centers per class with the exact Bayes posterior.
struct PosteriorOracle {
  std::vector<std::array<double, 2>> means_positive;
  std::vector<std::array<double, 2>> means_negative;
  double component_variance = 0.2;

  /// {P(y = +1 | x), P(y = -1 | x)} under equal class priors, each
  /// computed from its own likelihood.
  std::array<double, 2> class_posteriors(std::span<const double> x) const;

  /// P(y = +1 | x).
  double posterior(std::span<const double> x) const { return class_posteriors(x)[0]; }
};

struct Synth2Result {
  Dataset data;
  PosteriorOracle oracle;
};
Synth2Result gen_synth2(std::uint64_t seed);

/// 400 uniform points in the unit square labeled by x2 > x1, with 80 labels
/// flipped among points closer than width/2 to the diagonal.
struct BandResult {
  Dataset data;
  std::vector<std::size_t> flipped;
  std::size_t band_points = 0;
  /// True when fewer than the requested number of points fell in the band.
  bool short_band = false;
};
inline constexpr double kBandWidth = 0.225;
inline constexpr std::size_t kBandFlips = 80;
BandResult gen_diagonal_band(std::uint64_t seed);

/// Perpendicular distance from x to the line x2 = x1.
double diagonal_distance(std::span<const double> x);

/// Reject-option Bayes rule on a posterior: -1 if p < d, +1 if p > 1 - d,
/// else 0.
int bayes_decision(double posterior_positive, double d);
int bayes_predict(const PosteriorOracle& oracle, std::span<const double> x, double d);

}  // namespace droc
