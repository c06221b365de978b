#include "droc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "droc/data.hpp"
#include "droc/error.hpp"
#include "droc/eval.hpp"
#include "droc/model.hpp"
#include "droc/rng.hpp"
#include "droc/trainer.hpp"

namespace droc {

namespace fs = std::filesystem;

namespace {

/// Raised for output files that cannot be written.
class OutputError : public Error {
 public:
  using Error::Error;
};

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw OutputError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw OutputError("write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw OutputError("cannot move output into '" + path.string() + "'");
  }
}

void write_dataset_atomic(const Dataset& data, const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  try {
    write_csv(data, tmp, /*header=*/true);
  } catch (const ParseError& e) {
    throw OutputError(e.what());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw OutputError("cannot move output into '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create '" + dir.string() + "'");
}

std::string fmt(double v, int digits = 10) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// A first line whose first cell is not a number is taken as a header.
bool has_header_line(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return false;
  const std::string cell = line.substr(0, line.find(','));
  std::istringstream ss(cell);
  double v;
  ss >> v;
  return ss.fail();
}

struct DataFlags {
  std::string path;
  std::string format = "csv";
  int label_col = -1;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.path, "Input dataset")->required();
  cmd->add_option("--format", f.format, "csv or libsvm")
      ->check(CLI::IsMember({"csv", "libsvm"}));
  cmd->add_option("--label-col", f.label_col,
                  "Zero-based label column for CSV; negative counts from the end");
}

Dataset load_data(const DataFlags& f, std::ostream& err) {
  if (f.format == "libsvm") return load_libsvm(f.path);
  CsvOptions opts;
  opts.label_column = f.label_col;
  opts.has_header = has_header_line(f.path);
  std::vector<std::string> notes;
  Dataset data = load_csv(f.path, opts, &notes);
  for (const auto& n : notes) err << "note: " << n << "\n";
  return data;
}

struct ModelFlags {
  double C = 1.0;
  double d = 0.2;
  double mu = 1.0;
  std::string kernel = "linear";
  double gamma = 1.0;
  std::size_t dc_max_iter = 50;
  double dc_tol = 1e-4;
  double qp_tol = 1e-6;
  bool no_standardize = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f, bool with_cost = true) {
  if (with_cost) {
    cmd->add_option("--cost-d", f.d, "Rejection cost d in (0, 0.5]");
    cmd->add_option("--reg-c", f.C, "Regularization trade-off C > 0");
  }
  cmd->add_option("--mu", f.mu, "Ramp slope parameter mu in (0, 1]");
  cmd->add_option("--kernel", f.kernel, "linear or rbf")->check(CLI::IsMember({"linear", "rbf"}));
  cmd->add_option("--gamma", f.gamma, "RBF width: k(x, z) = exp(-gamma |x - z|^2)");
  cmd->add_option("--dc-max-iter", f.dc_max_iter, "Outer DC iterations");
  cmd->add_option("--dc-tol", f.dc_tol, "Outer convergence tolerance");
  cmd->add_option("--qp-tol", f.qp_tol, "Dual solver KKT tolerance");
  cmd->add_flag("--no-standardize", f.no_standardize, "Train on raw features");
}

Hyperparams to_hyper(const ModelFlags& f) {
  Hyperparams h;
  h.C = f.C;
  h.d = f.d;
  h.mu = f.mu;
  h.kernel = parse_kernel_kind(f.kernel) == KernelKind::kRbf ? KernelSpec::rbf(f.gamma)
                                                              : KernelSpec::linear();
  h.dc_max_iter = f.dc_max_iter;
  h.dc_tol = f.dc_tol;
  h.qp_tol = f.qp_tol;
  validate(h);
  return h;
}

std::string pct(double fraction) { return fmt(100.0 * fraction, 4); }

// ---------------------------------------------------------------------------

struct GenFlags {
  std::string generator;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen_data(const GenFlags& f, std::ostream& out) {
  nlohmann::json side = {{"generator", f.generator}, {"seed", f.seed}};
  Dataset data;
  if (f.generator == "synth1") {
    auto r = gen_synth1(f.seed);
    data = std::move(r.data);
    side["flipped"] = r.flipped;
  } else if (f.generator == "synth2") {
    auto r = gen_synth2(f.seed);
    data = std::move(r.data);
    auto means = [](const auto& list) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& m : list) a.push_back({m[0], m[1]});
      return a;
    };
    side["oracle"] = {{"means_positive", means(r.oracle.means_positive)},
                      {"means_negative", means(r.oracle.means_negative)},
                      {"component_variance", r.oracle.component_variance},
                      {"prior_positive", 0.5}};
  } else {
    auto r = gen_diagonal_band(f.seed);
    data = std::move(r.data);
    side["flipped"] = r.flipped;
    side["band_points"] = r.band_points;
    side["short_band"] = r.short_band;
  }
  side["rows"] = data.size();
  write_dataset_atomic(data, f.out);
  write_atomic(f.out + ".json", side.dump(2) + "\n");
  out << "wrote " << data.size() << " rows to " << f.out << " (generator " << f.generator
      << ", seed " << f.seed << ")\n";
  return kExitOk;
}

struct TrainFlags {
  DataFlags data;
  ModelFlags model;
  std::uint64_t seed = 1;
  std::string model_out;
};

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  const Hyperparams hyper = to_hyper(f.model);
  const Dataset data = load_data(f.data, err);
  TrainResult result = fit(data, hyper, !f.model.no_standardize);
  Diagnostics diag = result.model.diagnostics();
  diag.seed = f.seed;
  const Model& m = result.model;
  const Model model(m.kernel(), m.support(), m.bias(), m.rho(), m.standardization(), m.hyper(),
                    diag);
  save(model, f.model_out);
  out << "final_risk " << fmt(diag.final_risk) << "\n"
      << "dc_iterations " << diag.dc_iterations << "\n"
      << "stop_reason " << diag.stop_reason << "\n"
      << "support_vectors " << model.support().size() << "\n"
      << "b " << fmt(model.bias()) << "\n"
      << "rho " << fmt(model.rho()) << "\n"
      << "seed " << f.seed << "\n"
      << "model " << f.model_out << "\n";
  if (!result.converged) {
    err << "warning: DC loop reached " << hyper.dc_max_iter
        << " iterations without converging; model written\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

struct PredictFlags {
  std::string model;
  std::string data;
  std::string out;
  bool labeled = false;
};

int cmd_predict(const PredictFlags& f, std::ostream& out) {
  const Model model = load(f.model);
  Matrix X = load_feature_csv(f.data, has_header_line(f.data));
  if (f.labeled && X.rows() > 0) {
    Matrix features;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const auto row = X.row(r);
      features.push_row(row.first(row.size() - 1));
    }
    X = std::move(features);
  }
  std::string text;
  if (X.rows() > 0) {
    if (X.cols() != model.dim()) {
      throw DimensionMismatch("model expects " + std::to_string(model.dim()) +
                              " features, input has " + std::to_string(X.cols()));
    }
    text = "f,prediction\n";
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const double v = model.decision_function(X.row(r));
      text += fmt(v, 17) + "," + std::to_string(reject_option_label(v, model.rho())) + "\n";
    }
  }
  write_atomic(f.out, text);
  out << "wrote " << X.rows() << " predictions to " << f.out << "\n";
  return kExitOk;
}

struct CvFlags {
  DataFlags data;
  ModelFlags model;
  std::size_t folds = 10;
  std::size_t reps = 10;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string out;
  std::string json_out;
};

CVOptions cv_options(const CvFlags& f, bool standardize) {
  CVOptions o;
  o.k = f.folds;
  o.repetitions = f.reps;
  o.seed = f.seed;
  o.standardize = standardize;
  o.threads = f.threads;
  return o;
}

void print_aggregate(const CVReport& r, std::ostream& out) {
  out << "d=" << fmt(r.hyper.d) << " C=" << fmt(r.hyper.C);
  if (r.hyper.kernel.kind == KernelKind::kRbf) out << " gamma=" << fmt(r.hyper.kernel.gamma);
  out << " risk=" << fmt(r.risk.mean, 4) << "+-" << fmt(r.risk.std, 3)
      << " RR%=" << pct(r.rejection_rate.mean) << "+-" << pct(r.rejection_rate.std) << " Acc%=";
  if (r.accuracy_defined) {
    out << pct(r.accuracy.mean) << "+-" << pct(r.accuracy.std);
  } else {
    out << "NA";
  }
  out << " seed=" << r.options.seed << "\n";
}

int cmd_cv(const CvFlags& f, std::ostream& out, std::ostream& err) {
  const Hyperparams hyper = to_hyper(f.model);
  const Dataset data = load_data(f.data, err);
  const CVReport report = kfold_cv(data, hyper, cv_options(f, !f.model.no_standardize));
  write_atomic(f.out, cv_report_csv(report));
  if (!f.json_out.empty()) write_atomic(f.json_out, cv_report_json(report));
  print_aggregate(report, out);
  if (report.std_undefined) out << "note: one repetition, standard deviations reported as NA\n";
  if (report.unconverged_folds > 0) {
    err << "warning: " << report.unconverged_folds << " fold trainings hit dc_max_iter\n";
  }
  return kExitOk;
}

struct GridFlags {
  CvFlags cv;
  std::vector<double> c_grid;
  std::vector<double> gamma_grid;
};

int cmd_grid(const GridFlags& f, std::ostream& out, std::ostream& err) {
  const Hyperparams base = to_hyper(f.cv.model);
  const Dataset data = load_data(f.cv.data, err);
  const bool linear = base.kernel.kind == KernelKind::kLinear;
  GridSpec grid = default_grid(linear);
  if (!f.c_grid.empty()) grid.C_values = f.c_grid;
  if (!linear && !f.gamma_grid.empty()) grid.gamma_values = f.gamma_grid;
  const GridResult result =
      grid_search(data, base, grid, cv_options(f.cv, !f.cv.model.no_standardize));
  std::string csv = std::string(kCvCsvHeader) + "\n";
  for (const auto& cell : result.cells) csv += cv_report_csv(cell, /*header=*/false);
  write_atomic(f.cv.out, csv);
  for (const auto& cell : result.cells) print_aggregate(cell, out);
  out << "best: ";
  print_aggregate(result.cells[result.best], out);
  return kExitOk;
}

struct BenchFlags {
  std::string suite;
  std::uint64_t seed = 1;
  std::string out_dir = "bench_out";
  std::size_t folds = 10;
  std::size_t reps = 10;
  std::size_t threads = 0;
  std::optional<bool> standardize;
  // Only for the file suite.
  DataFlags data;
  ModelFlags model;
};

struct SuiteConfig {
  Hyperparams hyper;
  bool standardize;
};

int bench_sweep(const std::string& suite, const Dataset& data, const SuiteConfig& cfg,
                const BenchFlags& f, std::ostream& out) {
  const fs::path dir = f.out_dir;
  std::string all = std::string(kCvCsvHeader) + "\n";
  std::string summary =
      "d,risk_mean,risk_std,rr_pct_mean,rr_pct_std,acc_pct_mean,acc_pct_std,seed\n";
  out << "suite " << suite << " (seed " << f.seed << ", " << f.reps << "x" << f.folds
      << "-fold CV)\n";
  out << std::left << std::setw(6) << "d" << std::setw(20) << "Risk" << std::setw(18) << "RR (%)"
      << "Acc (%)\n";
  CVOptions opts;
  opts.k = f.folds;
  opts.repetitions = f.reps;
  opts.seed = mix_seed(f.seed, 1);
  opts.standardize = cfg.standardize;
  opts.threads = f.threads;
  for (int step = 1; step <= 10; ++step) {
    Hyperparams h = cfg.hyper;
    h.d = 0.05 * step;
    const CVReport r = kfold_cv(data, h, opts);
    const std::string csv = cv_report_csv(r);
    write_atomic(dir / (suite + "_d" + fmt(h.d, 3) + ".csv"), csv);
    all += csv.substr(csv.find('\n') + 1);
    const std::string acc_mean = r.accuracy_defined ? pct(r.accuracy.mean) : "NA";
    const std::string acc_std =
        r.accuracy_defined && !r.std_undefined ? pct(r.accuracy.std) : "NA";
    const std::string risk_std = r.std_undefined ? "NA" : fmt(r.risk.std);
    const std::string rr_std = r.std_undefined ? "NA" : pct(r.rejection_rate.std);
    summary += fmt(h.d, 3) + "," + fmt(r.risk.mean) + "," + risk_std + "," +
               pct(r.rejection_rate.mean) + "," + rr_std + "," + acc_mean + "," + acc_std + "," +
               std::to_string(opts.seed) + "\n";
    out << std::left << std::setw(6) << fmt(h.d, 3) << std::setw(20)
        << (fmt(r.risk.mean, 4) + " +- " + fmt(r.risk.std, 2)) << std::setw(18)
        << (pct(r.rejection_rate.mean) + " +- " + fmt(100 * r.rejection_rate.std, 2))
        << (r.accuracy_defined ? pct(r.accuracy.mean) + " +- " + fmt(100 * r.accuracy.std, 2)
                               : std::string("NA"))
        << "\n";
  }
  write_atomic(dir / (suite + "_reports.csv"), all);
  write_atomic(dir / (suite + "_summary.csv"), summary);
  return kExitOk;
}

int bench_diagonal(const BenchFlags& f, std::ostream& out) {
  const BandResult band = gen_diagonal_band(f.seed);
  Hyperparams h;
  h.C = 100.0;
  h.d = 0.2;
  h.mu = 1.0;
  h.kernel = KernelSpec::linear();
  const bool standardize = f.standardize.value_or(false);
  const TrainResult result = fit(band.data, h, standardize);
  const Metrics m = evaluate(result.model, band.data, h.d);
  const fs::path dir = f.out_dir;
  write_dataset_atomic(band.data, dir / "diagonal-fig3_data.csv");
  save(result.model, dir / "diagonal-fig3_model.json");
  std::vector<char> flipped(band.data.size(), 0);
  for (const std::size_t i : band.flipped) flipped[i] = 1;
  std::string points = "x1,x2,y,flipped,f,prediction\n";
  for (std::size_t i = 0; i < band.data.size(); ++i) {
    const auto x = band.data.X.row(i);
    const double v = result.model.decision_function(x);
    points += fmt(x[0], 17) + "," + fmt(x[1], 17) + "," + std::to_string(band.data.y[i]) + "," +
              std::to_string(flipped[i]) + "," + fmt(v, 17) + "," +
              std::to_string(reject_option_label(v, result.model.rho())) + "\n";
  }
  write_atomic(dir / "diagonal-fig3_points.csv", points);
  std::ostringstream s;
  s << "suite diagonal-fig3 (seed " << f.seed << ")\n"
    << "band_points " << band.band_points << "\n"
    << "flipped " << band.flipped.size() << "\n"
    << "b " << fmt(result.model.bias()) << "\n"
    << "rho " << fmt(result.model.rho()) << "\n"
    << "support_vectors " << result.model.support().size() << "\n"
    << "train_risk " << fmt(m.risk, 4) << "\n"
    << "train_rejection_pct " << pct(m.rejection_rate) << "\n"
    << "train_accuracy_unrejected_pct " << (m.accuracy_defined ? pct(m.accuracy) : "NA") << "\n"
    << "stop_reason " << result.model.diagnostics().stop_reason << "\n";
  write_atomic(dir / "diagonal-fig3_summary.txt", s.str());
  out << s.str();
  return result.converged ? kExitOk : kExitNotConverged;
}

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err) {
  ensure_dir(f.out_dir);
  if (f.suite == "diagonal-fig3") return bench_diagonal(f, out);
  SuiteConfig cfg;
  Dataset data;
  if (f.suite == "synth1-table3") {
    data = gen_synth1(f.seed).data;
    cfg.hyper.C = 2.0;
    cfg.hyper.mu = 1.0;
    cfg.hyper.kernel = KernelSpec::linear();
    cfg.standardize = f.standardize.value_or(false);
  } else if (f.suite == "synth2-table4") {
    data = gen_synth2(f.seed).data;
    cfg.hyper.C = 64.0;
    cfg.hyper.mu = 1.0;
    cfg.hyper.kernel = KernelSpec::rbf(0.25);
    cfg.standardize = f.standardize.value_or(false);
  } else {
    data = load_data(f.data, err);
    cfg.hyper = to_hyper(f.model);
    cfg.standardize = f.standardize.value_or(!f.model.no_standardize);
  }
  write_dataset_atomic(data, fs::path(f.out_dir) / (f.suite + "_data.csv"));
  return bench_sweep(f.suite, data, cfg, f, out);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reject-option classifier trained with the double ramp loss"};
  app.name("droc");
  app.require_subcommand(1);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gen_cmd->add_option("--generator", gen.generator, "synth1, synth2 or diagonal-band")
      ->required()
      ->check(CLI::IsMember({"synth1", "synth2", "diagonal-band"}));
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--out", gen.out, "Output CSV; a JSON sidecar is written next to it")
      ->required();

  TrainFlags train_f;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write it as JSON");
  add_data_flags(train_cmd, train_f.data);
  add_model_flags(train_cmd, train_f.model);
  train_cmd->add_option("--seed", train_f.seed, "Seed recorded in the model diagnostics");
  train_cmd->add_option("--model-out", train_f.model_out, "Model file")->required();

  PredictFlags pred;
  auto* pred_cmd = app.add_subcommand("predict", "Score a feature CSV with a saved model");
  pred_cmd->add_option("--model", pred.model, "Model file")->required();
  pred_cmd->add_option("--data", pred.data, "Feature CSV")->required();
  pred_cmd->add_option("--out", pred.out, "Output CSV with columns f,prediction")->required();
  pred_cmd->add_flag("--labeled", pred.labeled, "Input has a trailing label column to ignore");

  CvFlags cv;
  auto* cv_cmd = app.add_subcommand("cv", "Repeated stratified k-fold cross-validation");
  add_data_flags(cv_cmd, cv.data);
  add_model_flags(cv_cmd, cv.model);
  cv_cmd->add_option("--folds", cv.folds, "Number of folds");
  cv_cmd->add_option("--reps", cv.reps, "Number of repetitions");
  cv_cmd->add_option("--seed", cv.seed, "Fold shuffling seed");
  cv_cmd->add_option("--threads", cv.threads, "Worker threads (0 = all cores)");
  cv_cmd->add_option("--out", cv.out, "Report CSV")->required();
  cv_cmd->add_option("--json", cv.json_out, "Optional report JSON");

  GridFlags grid;
  auto* grid_cmd = app.add_subcommand("grid", "Cross-validated grid search over C and gamma");
  add_data_flags(grid_cmd, grid.cv.data);
  add_model_flags(grid_cmd, grid.cv.model);
  grid_cmd->add_option("--c-grid", grid.c_grid, "C values (default 2^-1..2^7)")->delimiter(',');
  grid_cmd->add_option("--gamma-grid", grid.gamma_grid, "gamma values (default 2^-4..2^2)")
      ->delimiter(',');
  grid_cmd->add_option("--folds", grid.cv.folds, "Number of folds");
  grid_cmd->add_option("--reps", grid.cv.reps, "Number of repetitions");
  grid_cmd->add_option("--seed", grid.cv.seed, "Fold shuffling seed");
  grid_cmd->add_option("--threads", grid.cv.threads, "Worker threads (0 = all cores)");
  grid_cmd->add_option("--out", grid.cv.out, "Report CSV with one block per cell")->required();

  BenchFlags bench;
  bool bench_std = false;
  auto* bench_cmd = app.add_subcommand("bench", "Reproduce the desk-scale experiments");
  bench_cmd->add_option("--suite", bench.suite, "synth1-table3, synth2-table4, diagonal-fig3, file")
      ->required();
  bench_cmd->add_option("--seed", bench.seed, "Seed for data generation and folds");
  bench_cmd->add_option("--out-dir", bench.out_dir, "Directory for reports");
  bench_cmd->add_option("--folds", bench.folds, "Number of folds");
  bench_cmd->add_option("--reps", bench.reps, "Number of repetitions");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = all cores)");
  bench_cmd->add_flag("--standardize", bench_std, "Standardize features per training fold");
  bench_cmd->add_option("--data", bench.data.path, "Dataset for the file suite");
  bench_cmd->add_option("--format", bench.data.format, "csv or libsvm")
      ->check(CLI::IsMember({"csv", "libsvm"}));
  bench_cmd->add_option("--label-col", bench.data.label_col, "Label column for CSV");
  add_model_flags(bench_cmd, bench.model, /*with_cost=*/false);
  bench_cmd->add_option("--reg-c", bench.model.C, "C for the file suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, out);
    if (*train_cmd) return cmd_train(train_f, out, err);
    if (*pred_cmd) return cmd_predict(pred, out);
    if (*cv_cmd) return cmd_cv(cv, out, err);
    if (*grid_cmd) return cmd_grid(grid, out, err);
    if (*bench_cmd) {
      static const std::vector<std::string> suites = {"synth1-table3", "synth2-table4",
                                                      "diagonal-fig3", "file"};
      if (std::find(suites.begin(), suites.end(), bench.suite) == suites.end()) {
        err << "error: unknown suite '" << bench.suite << "'\n";
        return kExitUsage;
      }
      if (bench.suite == "file" && bench.data.path.empty()) {
        err << "error: the file suite needs --data\n";
        return kExitUsage;
      }
      if (bench_std) bench.standardize = true;
      if (bench.model.no_standardize) bench.standardize = false;
      return cmd_bench(bench, out, err);
    }
  } catch (const DegenerateData& e) {
    err << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const DimensionMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const ModelIOError& e) {
    err << "error: " << e.what() << "\n";
    return kExitModelIO;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace droc
