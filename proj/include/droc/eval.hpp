#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "droc/data.hpp"
#include "droc/hyperparams.hpp"
#include "droc/model.hpp"

namespace droc {

/// Outcome of a reject-option classifier under the 0-d-1 loss.
struct Metrics {
  std::size_t n_correct = 0;
  std::size_t n_wrong = 0;
  std::size_t n_rejected = 0;
  double risk = 0.0;            // (n_wrong + d n_rejected) / N
  double rejection_rate = 0.0;  // n_rejected / N
  double accuracy = 0.0;        // n_correct / (n_correct + n_wrong)
  bool accuracy_defined = false;

  std::size_t total() const { return n_correct + n_wrong + n_rejected; }
};

/// Builds metrics from counts. An empty set gives zero risk and rates.
Metrics metrics_from_counts(std::size_t n_correct, std::size_t n_wrong, std::size_t n_rejected,
                            double d);

/// Scores `model` on raw features. d must lie in (0, 0.5].
Metrics evaluate(const Model& model, const Dataset& data, double d);

/// Metrics from predicted labels in {-1, 0, +1}.
Metrics evaluate_predictions(std::span<const int> predicted, std::span<const int> truth, double d);

/// Stratified split into k test folds. Each class is shuffled and dealt to
/// folds round-robin, continuing the deal across classes. Every index lands
/// in exactly one fold. Needs N >= k; throws DegenerateData when a class
/// has fewer than 2 members (some training fold would lose it).
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t k,
                                                       std::uint64_t seed);

struct CVOptions {
  std::size_t k = 10;
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;
  bool standardize = true;
  /// Worker threads for folds; 0 uses the hardware concurrency.
  std::size_t threads = 0;
};

struct RepetitionResult {
  std::uint64_t seed = 0;
  Metrics metrics;  // pooled over the test folds
  std::size_t unconverged_folds = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct CVReport {
  Hyperparams hyper;
  CVOptions options;
  std::vector<RepetitionResult> repetitions;
  MeanStd risk;
  MeanStd rejection_rate;
  /// Over repetitions with a defined accuracy; undefined when none has one.
  MeanStd accuracy;
  bool accuracy_defined = false;
  /// Fewer than two repetitions: the standard deviations are 0 by convention.
  bool std_undefined = false;
  std::size_t unconverged_folds = 0;
};

/// Repeated stratified k-fold cross-validation. Standardization is fitted
/// on each training fold. Deterministic for a given seed regardless of the
/// thread count.
CVReport kfold_cv(const Dataset& data, const Hyperparams& hyper, const CVOptions& options);

/// Fixed column order of the report CSV.
inline constexpr const char* kCvCsvHeader =
    "d,C,gamma,risk_mean,risk_std,rr_mean,rr_std,acc_mean,acc_std,row,seed";

/// One row per repetition followed by the aggregate row. Undefined values
/// print as NA; gamma is NA for the linear kernel.
std::string cv_report_csv(const CVReport& report, bool header = true);
std::string cv_report_json(const CVReport& report);

struct GridSpec {
  std::vector<double> C_values;
  /// RBF gamma values; empty means the linear kernel.
  std::vector<double> gamma_values;
};

/// Powers of two 2^-1..2^7 for C and 2^-4..2^2 for gamma.
GridSpec default_grid(bool linear);

struct GridResult {
  std::vector<CVReport> cells;  // C-major, gamma-minor
  std::size_t best = 0;
  Hyperparams best_hyper;
};

/// Cross-validates every cell with `base` supplying d, mu and solver
/// settings. Best is the lowest mean risk; ties go to smaller C, then
/// smaller gamma, then the earlier cell.
GridResult grid_search(const Dataset& data, const Hyperparams& base, const GridSpec& grid,
                       const CVOptions& options);

/// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
/// The first exception thrown by any task is rethrown after all finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace droc
