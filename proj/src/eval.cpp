#include "droc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "droc/error.hpp"
#include "droc/rng.hpp"
#include "droc/trainer.hpp"

namespace droc {

namespace {

void check_cost(double d) {
  if (!(d > 0.0 && d <= 0.5)) throw InvalidArgument("d must lie in (0, 0.5]");
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (const double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string gamma_field(const KernelSpec& kernel) {
  return kernel.kind == KernelKind::kRbf ? fmt(kernel.gamma) : "NA";
}

}  // namespace

Metrics metrics_from_counts(std::size_t n_correct, std::size_t n_wrong, std::size_t n_rejected,
                            double d) {
  Metrics m;
  m.n_correct = n_correct;
  m.n_wrong = n_wrong;
  m.n_rejected = n_rejected;
  const std::size_t n = m.total();
  if (n > 0) {
    const double total = static_cast<double>(n);
    m.risk = (static_cast<double>(n_wrong) + d * static_cast<double>(n_rejected)) / total;
    m.rejection_rate = static_cast<double>(n_rejected) / total;
  }
  const std::size_t accepted = n_correct + n_wrong;
  m.accuracy_defined = accepted > 0;
  if (m.accuracy_defined) {
    m.accuracy = static_cast<double>(n_correct) / static_cast<double>(accepted);
  }
  return m;
}

Metrics evaluate_predictions(std::span<const int> predicted, std::span<const int> truth,
                             double d) {
  check_cost(d);
  if (predicted.size() != truth.size()) {
    throw DimensionMismatch("prediction and label counts differ");
  }
  std::size_t correct = 0, wrong = 0, rejected = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 0) {
      ++rejected;
    } else if (predicted[i] == truth[i]) {
      ++correct;
    } else {
      ++wrong;
    }
  }
  return metrics_from_counts(correct, wrong, rejected, d);
}

Metrics evaluate(const Model& model, const Dataset& data, double d) {
  if (data.size() > 0 && data.dim() != model.dim()) {
    throw DimensionMismatch("model expects " + std::to_string(model.dim()) +
                            " features, data has " + std::to_string(data.dim()));
  }
  std::vector<int> predicted(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) predicted[i] = model.predict(data.X.row(i));
  return evaluate_predictions(predicted, data.y, d);
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("need at least 2 folds");
  if (labels.size() < k) throw InvalidArgument("fewer samples than folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? pos : neg).push_back(i);
  // Dealing puts the members of a class into distinct folds, so every
  // training fold keeps both classes once each class has two members.
  if (pos.size() < 2 || neg.size() < 2) {
    throw DegenerateData("each class needs at least 2 samples for cross-validation (have " +
                         std::to_string(pos.size()) + " positive, " +
                         std::to_string(neg.size()) + " negative)");
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(pos));
  rng.shuffle(std::span<std::size_t>(neg));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (const auto* group : {&pos, &neg}) {
    for (const std::size_t i : *group) {
      folds[next].push_back(i);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

CVReport kfold_cv(const Dataset& data, const Hyperparams& hyper, const CVOptions& options) {
  validate(hyper);
  validate(data, /*require_both_classes=*/true);
  if (options.repetitions == 0) throw InvalidArgument("need at least one repetition");
  const std::size_t k = options.k;
  const std::size_t reps = options.repetitions;

  std::vector<std::uint64_t> rep_seeds(reps);
  std::vector<std::vector<std::vector<std::size_t>>> splits(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    rep_seeds[r] = mix_seed(options.seed, r);
    splits[r] = stratified_folds(data.y, k, rep_seeds[r]);
  }

  struct FoldOutcome {
    std::size_t correct = 0, wrong = 0, rejected = 0;
    bool converged = true;
  };
  std::vector<FoldOutcome> outcomes(reps * k);
  parallel_for(reps * k, options.threads, [&](std::size_t task) {
    const std::size_t r = task / k;
    const auto& test_idx = splits[r][task % k];
    std::vector<char> in_test(data.size(), 0);
    for (const std::size_t i : test_idx) in_test[i] = 1;
    std::vector<std::size_t> train_idx;
    train_idx.reserve(data.size() - test_idx.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!in_test[i]) train_idx.push_back(i);
    }
    const Dataset train_set = data.subset(train_idx);
    const Dataset test_set = data.subset(test_idx);
    const TrainResult trained = fit(train_set, hyper, options.standardize);
    const Metrics m = evaluate(trained.model, test_set, hyper.d);
    outcomes[task] = {m.n_correct, m.n_wrong, m.n_rejected, trained.converged};
  });

  CVReport report;
  report.hyper = hyper;
  report.options = options;
  std::vector<double> risks, rates, accs;
  for (std::size_t r = 0; r < reps; ++r) {
    RepetitionResult rep;
    rep.seed = rep_seeds[r];
    std::size_t c = 0, w = 0, j = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto& o = outcomes[r * k + f];
      c += o.correct;
      w += o.wrong;
      j += o.rejected;
      if (!o.converged) ++rep.unconverged_folds;
    }
    rep.metrics = metrics_from_counts(c, w, j, hyper.d);
    report.unconverged_folds += rep.unconverged_folds;
    risks.push_back(rep.metrics.risk);
    rates.push_back(rep.metrics.rejection_rate);
    if (rep.metrics.accuracy_defined) accs.push_back(rep.metrics.accuracy);
    report.repetitions.push_back(rep);
  }
  report.risk = mean_std(risks);
  report.rejection_rate = mean_std(rates);
  report.accuracy = mean_std(accs);
  report.accuracy_defined = !accs.empty();
  report.std_undefined = reps < 2;
  return report;
}

std::string cv_report_csv(const CVReport& report, bool header) {
  std::string out;
  if (header) out += std::string(kCvCsvHeader) + "\n";
  const std::string prefix =
      fmt(report.hyper.d) + "," + fmt(report.hyper.C) + "," + gamma_field(report.hyper.kernel) + ",";
  for (std::size_t r = 0; r < report.repetitions.size(); ++r) {
    const auto& rep = report.repetitions[r];
    const Metrics& m = rep.metrics;
    out += prefix + fmt(m.risk) + ",NA," + fmt(m.rejection_rate) + ",NA," +
           (m.accuracy_defined ? fmt(m.accuracy) : "NA") + ",NA," + std::to_string(r + 1) + "," +
           std::to_string(rep.seed) + "\n";
  }
  auto sd = [&](double v) { return report.std_undefined ? std::string("NA") : fmt(v); };
  out += prefix + fmt(report.risk.mean) + "," + sd(report.risk.std) + "," +
         fmt(report.rejection_rate.mean) + "," + sd(report.rejection_rate.std) + "," +
         (report.accuracy_defined ? fmt(report.accuracy.mean) + "," + sd(report.accuracy.std)
                                  : std::string("NA,NA")) +
         ",aggregate," + std::to_string(report.options.seed) + "\n";
  return out;
}

std::string cv_report_json(const CVReport& report) {
  using nlohmann::json;
  auto maybe = [](bool defined, double v) { return defined ? json(v) : json(nullptr); };
  json reps = json::array();
  for (const auto& rep : report.repetitions) {
    const Metrics& m = rep.metrics;
    reps.push_back({{"seed", rep.seed},
                    {"risk", m.risk},
                    {"rejection_rate", m.rejection_rate},
                    {"accuracy", maybe(m.accuracy_defined, m.accuracy)},
                    {"n_correct", m.n_correct},
                    {"n_wrong", m.n_wrong},
                    {"n_rejected", m.n_rejected},
                    {"unconverged_folds", rep.unconverged_folds}});
  }
  const auto& h = report.hyper;
  json doc = {
      {"hyper",
       {{"C", h.C},
        {"d", h.d},
        {"mu", h.mu},
        {"kernel", to_string(h.kernel.kind)},
        {"gamma", maybe(h.kernel.kind == KernelKind::kRbf, h.kernel.gamma)}}},
      {"folds", report.options.k},
      {"seed", report.options.seed},
      {"standardize", report.options.standardize},
      {"repetitions", reps},
      {"aggregate",
       {{"risk_mean", report.risk.mean},
        {"risk_std", maybe(!report.std_undefined, report.risk.std)},
        {"rr_mean", report.rejection_rate.mean},
        {"rr_std", maybe(!report.std_undefined, report.rejection_rate.std)},
        {"acc_mean", maybe(report.accuracy_defined, report.accuracy.mean)},
        {"acc_std",
         maybe(report.accuracy_defined && !report.std_undefined, report.accuracy.std)},
        {"std_undefined", report.std_undefined},
        {"unconverged_folds", report.unconverged_folds}}}};
  return doc.dump(2) + "\n";
}

GridSpec default_grid(bool linear) {
  GridSpec grid;
  for (int e = -1; e <= 7; ++e) grid.C_values.push_back(std::ldexp(1.0, e));
  if (!linear) {
    for (int e = -4; e <= 2; ++e) grid.gamma_values.push_back(std::ldexp(1.0, e));
  }
  return grid;
}

GridResult grid_search(const Dataset& data, const Hyperparams& base, const GridSpec& grid,
                       const CVOptions& options) {
  if (grid.C_values.empty()) throw InvalidArgument("grid has no C values");
  std::vector<Hyperparams> cells;
  for (const double C : grid.C_values) {
    if (grid.gamma_values.empty()) {
      Hyperparams h = base;
      h.C = C;
      h.kernel = KernelSpec::linear();
      cells.push_back(h);
    }
    for (const double g : grid.gamma_values) {
      Hyperparams h = base;
      h.C = C;
      h.kernel = KernelSpec::rbf(g);
      cells.push_back(h);
    }
  }
  for (const auto& h : cells) validate(h);

  GridResult result;
  result.cells.resize(cells.size());
  CVOptions inner = options;
  inner.threads = 1;
  parallel_for(cells.size(), options.threads,
               [&](std::size_t i) { result.cells[i] = kfold_cv(data, cells[i], inner); });

  auto gamma_of = [](const Hyperparams& h) {
    return h.kernel.kind == KernelKind::kRbf ? h.kernel.gamma : 0.0;
  };
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const auto& a = result.cells[i];
    const auto& b = result.cells[result.best];
    const bool better =
        a.risk.mean < b.risk.mean ||
        (a.risk.mean == b.risk.mean &&
         (a.hyper.C < b.hyper.C ||
          (a.hyper.C == b.hyper.C && gamma_of(a.hyper) < gamma_of(b.hyper))));
    if (better) result.best = i;
  }
  result.best_hyper = cells[result.best];
  return result;
}

}  // namespace droc
