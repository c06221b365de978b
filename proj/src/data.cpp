#include "droc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "droc/error.hpp"
#include "droc/rng.hpp"

namespace droc {

std::size_t Dataset::count(int label) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.X = X.select_rows(indices);
  out.y.reserve(indices.size());
  for (const std::size_t i : indices) out.y.push_back(y[i]);
  out.name = name;
  return out;
}

void validate(const Dataset& data, bool require_both_classes) {
  if (data.X.rows() != data.y.size()) {
    throw DimensionMismatch("dataset has " + std::to_string(data.X.rows()) + " rows but " +
                            std::to_string(data.y.size()) + " labels");
  }
  for (const double v : data.X.data()) {
    if (!std::isfinite(v)) throw NonFiniteInput("dataset contains NaN or Inf features");
  }
  for (const int label : data.y) {
    if (label != 1 && label != -1) throw InvalidArgument("labels must be -1 or +1");
  }
  if (require_both_classes && (data.count(1) == 0 || data.count(-1) == 0)) {
    throw DegenerateData("dataset '" + data.name + "' contains a single class");
  }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return in;
}

bool is_blank(const std::string& line) { return trim(line).empty(); }

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options,
                 std::vector<std::string>* notes) {
  auto in = open_input(path);
  Dataset data;
  data.name = path.filename().string();
  std::vector<double> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  bool header_pending = options.has_header;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = split_commas(line);
    if (columns == 0) {
      columns = cells.size();
      if (columns < 1) throw ParseError("line " + std::to_string(line_no) + ": no columns");
    } else if (cells.size() != columns) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(columns) + " columns, found " +
                       std::to_string(cells.size()));
    }
    const int signed_col = options.label_column < 0
                               ? static_cast<int>(columns) + options.label_column
                               : options.label_column;
    if (signed_col < 0 || signed_col >= static_cast<int>(columns)) {
      throw ParseError("label column " + std::to_string(options.label_column) +
                       " does not exist (file has " + std::to_string(columns) + " columns)");
    }
    const auto label_col = static_cast<std::size_t>(signed_col);
    row.clear();
    for (std::size_t c = 0; c < columns; ++c) {
      double value = 0.0;
      if (!parse_double(cells[c], value)) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                         ": cannot parse '" + cells[c] + "' as a number");
      }
      if (c == label_col) {
        raw_labels.push_back(value);
      } else {
        row.push_back(value);
      }
    }
    data.X.push_row(row);
  }
  if (columns > 0 && data.X.rows() > 0 && data.X.cols() != columns - 1) {
    throw ParseError("inconsistent feature count");
  }

  const bool zero_one = std::all_of(raw_labels.begin(), raw_labels.end(),
                                    [](double v) { return v == 0.0 || v == 1.0; });
  const bool has_zero = std::any_of(raw_labels.begin(), raw_labels.end(),
                                    [](double v) { return v == 0.0; });
  data.y.reserve(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    const double v = raw_labels[i];
    if (zero_one && has_zero) {
      data.y.push_back(v == 1.0 ? 1 : -1);
    } else if (v == 1.0 || v == -1.0) {
      data.y.push_back(static_cast<int>(v));
    } else {
      throw ParseError("row " + std::to_string(i + 1) + ": label " + std::to_string(v) +
                       " is not in {-1, +1} or {0, 1}");
    }
  }
  if (notes && zero_one && has_zero) notes->push_back("labels {0,1} remapped to {-1,+1}");
  if (notes && !data.y.empty() && (data.count(1) == 0 || data.count(-1) == 0)) {
    notes->push_back("warning: '" + data.name + "' contains a single class");
  }
  return data;
}

Matrix load_feature_csv(const std::filesystem::path& path, bool has_header) {
  auto in = open_input(path);
  Matrix X;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = split_commas(line);
    row.clear();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double value = 0.0;
      if (!parse_double(cells[c], value)) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                         ": cannot parse '" + cells[c] + "' as a number");
      }
      row.push_back(value);
    }
    if (X.rows() > 0 && row.size() != X.cols()) {
      throw DimensionMismatch("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(X.cols()) + " columns, found " +
                              std::to_string(row.size()));
    }
    X.push_row(row);
  }
  return X;
}

Dataset load_libsvm(const std::filesystem::path& path) {
  auto in = open_input(path);
  struct SparseRow {
    int label;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<SparseRow> rows;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (is_blank(line)) continue;
    std::istringstream tokens(line);
    std::string token;
    tokens >> token;
    double label_value = 0.0;
    if (!parse_double(token, label_value) ||
        !(label_value == 1.0 || label_value == -1.0 || label_value == 0.0)) {
      throw ParseError("line " + std::to_string(line_no) + ": bad label '" + token + "'");
    }
    SparseRow row{label_value == 1.0 ? 1 : -1, {}};
    std::size_t last_index = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw ParseError("line " + std::to_string(line_no) + ": expected idx:val, got '" + token +
                         "'");
      }
      std::size_t index = 0;
      const auto idx_text = token.substr(0, colon);
      const auto [ptr, ec] =
          std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
      double value = 0.0;
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() ||
          !parse_double(token.substr(colon + 1), value)) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed entry '" + token + "'");
      }
      if (index == 0) {
        throw ParseError("line " + std::to_string(line_no) + ": feature indices are 1-based");
      }
      if (index <= last_index) {
        throw ParseError("line " + std::to_string(line_no) + ": indices must increase");
      }
      last_index = index;
      max_index = std::max(max_index, index);
      row.entries.emplace_back(index - 1, value);
    }
    rows.push_back(std::move(row));
  }
  Dataset data;
  data.name = path.filename().string();
  data.X = Matrix(rows.size(), max_index);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    data.y.push_back(rows[r].label);
    for (const auto& [col, value] : rows[r].entries) data.X(r, col) = value;
  }
  return data;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, bool header) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  if (header) {
    for (std::size_t c = 0; c < data.dim(); ++c) out << 'x' << (c + 1) << ',';
    out << "y\n";
  }
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (const double v : data.X.row(r)) out << v << ',';
    out << data.y[r] << '\n';
  }
  if (!out) throw ParseError("failed while writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Standardization

Standardization Standardization::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

Standardization standardize_fit(const Dataset& train) {
  const std::size_t n = train.size();
  const std::size_t p = train.dim();
  Standardization params = Standardization::identity(p);
  if (n == 0) return params;
  for (std::size_t c = 0; c < p; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += train.X(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double diff = train.X(r, c) - mean;
      var += diff * diff;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    params.mean[c] = mean;
    // Spread at rounding level counts as constant.
    params.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return params;
}

void standardize_apply_inplace(const Standardization& params, std::span<double> x) {
  if (params.mean.size() != x.size()) {
    throw DimensionMismatch("standardization expects " + std::to_string(params.mean.size()) +
                            " features, got " + std::to_string(x.size()));
  }
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - params.mean[c]) / params.scale[c];
}

Matrix standardize_apply(const Standardization& params, const Matrix& X) {
  Matrix out = X;
  for (std::size_t r = 0; r < out.rows(); ++r) standardize_apply_inplace(params, out.row(r));
  return out;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct Box {
  double x_lo, x_hi, y_lo, y_hi;
};

struct BoxMixture {
  std::array<double, 3> weights;
  std::array<Box, 3> boxes;
};

// Negative class lives in x1 <= 0, positive class in x1 >= 0.
constexpr BoxMixture kSynth1Negative{
    {0.45, 0.5, 0.05},
    {Box{-1.0, 0.0, -1.0, 1.0}, Box{-4.0, -3.0, 0.0, 1.0}, Box{-10.0, 0.0, -5.0, 5.0}}};
constexpr BoxMixture kSynth1Positive{
    {0.45, 0.5, 0.05},
    {Box{0.0, 1.0, -1.0, 1.0}, Box{9.0, 10.0, -1.0, 0.0}, Box{0.0, 10.0, -5.0, 5.0}}};

std::array<double, 2> draw_box_mixture(const BoxMixture& mix, Rng& rng) {
  const double u = rng.uniform01();
  std::size_t k = 0;
  double cumulative = mix.weights[0];
  while (k + 1 < mix.weights.size() && u >= cumulative) {
    ++k;
    cumulative += mix.weights[k];
  }
  const Box& box = mix.boxes[k];
  const double x1 = rng.uniform(box.x_lo, box.x_hi);
  const double x2 = rng.uniform(box.y_lo, box.y_hi);
  return {x1, x2};
}

}  // namespace

Synth1Result gen_synth1(std::uint64_t seed) {
  constexpr std::size_t kPerClass = 150;
  constexpr std::size_t kFlips = 30;  // 10% of 300
  Rng rng(seed);
  Synth1Result result;
  Dataset& data = result.data;
  data.name = "synth1";
  for (const BoxMixture* mix : {&kSynth1Negative, &kSynth1Positive}) {
    for (std::size_t i = 0; i < kPerClass; ++i) {
      auto x = draw_box_mixture(*mix, rng);
      // Zero has probability zero; guard so the label rule stays total.
      while (x[0] == 0.0) x = draw_box_mixture(*mix, rng);
      data.X.push_row(x);
      data.y.push_back(x[0] > 0.0 ? 1 : -1);
    }
  }
  result.flipped = rng.sample_without_replacement(data.size(), kFlips);
  for (const std::size_t i : result.flipped) data.y[i] = -data.y[i];
  return result;
}

std::array<double, 2> PosteriorOracle::class_posteriors(std::span<const double> x) const {
  if (x.size() != 2) throw DimensionMismatch("posterior oracle expects 2-D points");
  auto log_terms = [&](const std::vector<std::array<double, 2>>& means) {
    std::vector<double> terms;
    terms.reserve(means.size());
    for (const auto& m : means) {
      const double dx = x[0] - m[0];
      const double dy = x[1] - m[1];
      terms.push_back(-(dx * dx + dy * dy) / (2.0 * component_variance));
    }
    return terms;
  };
  const auto pos = log_terms(means_positive);
  const auto neg = log_terms(means_negative);
  double top = -std::numeric_limits<double>::infinity();
  for (const double t : pos) top = std::max(top, t);
  for (const double t : neg) top = std::max(top, t);
  // Equal priors, equal weights and shared covariance: normalizers cancel
  // except for the per-class component counts.
  double sum_pos = 0.0;
  for (const double t : pos) sum_pos += std::exp(t - top);
  double sum_neg = 0.0;
  for (const double t : neg) sum_neg += std::exp(t - top);
  sum_pos /= static_cast<double>(means_positive.size());
  sum_neg /= static_cast<double>(means_negative.size());
  const double total = sum_pos + sum_neg;
  return {sum_pos / total, sum_neg / total};
}

Synth2Result gen_synth2(std::uint64_t seed) {
  constexpr std::size_t kCenters = 10;
  constexpr std::size_t kPerClass = 100;
  Rng rng(seed);
  Synth2Result result;
  PosteriorOracle& oracle = result.oracle;
  oracle.component_variance = 0.2;
  for (std::size_t k = 0; k < kCenters; ++k) {
    const double a = rng.normal();
    const double b = rng.normal();
    oracle.means_positive.push_back({1.0 + a, b});
  }
  for (std::size_t k = 0; k < kCenters; ++k) {
    const double a = rng.normal();
    const double b = rng.normal();
    oracle.means_negative.push_back({a, 1.0 + b});
  }
  const double sd = std::sqrt(oracle.component_variance);
  Dataset& data = result.data;
  data.name = "synth2";
  for (const auto* means : {&oracle.means_positive, &oracle.means_negative}) {
    const int label = means == &oracle.means_positive ? 1 : -1;
    for (std::size_t i = 0; i < kPerClass; ++i) {
      const auto& center = (*means)[rng.index(kCenters)];
      const double a = rng.normal();
      const double b = rng.normal();
      const std::array<double, 2> x{center[0] + sd * a, center[1] + sd * b};
      data.X.push_row(x);
      data.y.push_back(label);
    }
  }
  return result;
}

double diagonal_distance(std::span<const double> x) {
  return std::abs(x[1] - x[0]) / std::numbers::sqrt2;
}

BandResult gen_diagonal_band(std::uint64_t seed) {
  constexpr std::size_t kPoints = 400;
  Rng rng(seed);
  BandResult result;
  Dataset& data = result.data;
  data.name = "diagonal-band";
  std::vector<std::size_t> band;
  for (std::size_t i = 0; i < kPoints; ++i) {
    const double a = rng.uniform01();
    const double b = rng.uniform01();
    const std::array<double, 2> x{a, b};
    data.X.push_row(x);
    data.y.push_back(b > a ? 1 : -1);
    if (diagonal_distance(x) < kBandWidth / 2.0) band.push_back(i);
  }
  result.band_points = band.size();
  result.short_band = band.size() < kBandFlips;
  const auto picks = rng.sample_without_replacement(band.size(), kBandFlips);
  for (const std::size_t k : picks) {
    result.flipped.push_back(band[k]);
    data.y[band[k]] = -data.y[band[k]];
  }
  return result;
}

int bayes_decision(double posterior_positive, double d) {
  if (posterior_positive < d) return -1;
  if (posterior_positive > 1.0 - d) return 1;
  return 0;
}

int bayes_predict(const PosteriorOracle& oracle, std::span<const double> x, double d) {
  if (!(d > 0.0 && d <= 0.5)) throw InvalidArgument("d must lie in (0, 0.5]");
  return bayes_decision(oracle.posterior(x), d);
}

}  // namespace droc
