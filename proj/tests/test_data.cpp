#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "droc/data.hpp"
#include "droc/error.hpp"

namespace droc {
namespace fs = std::filesystem;
namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / ("droc_test_data_" + name);
  std::ofstream(p) << content;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(LoadCsv, LabelsAsGiven) {
  const auto p = write_temp("basic.csv", "1,2,-1\n3,4,1\n5,6,1\n");
  const Dataset d = load_csv(p);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.y, (std::vector<int>{-1, 1, 1}));
  EXPECT_EQ(d.X(2, 1), 6.0);
}

TEST(LoadCsv, ZeroOneLabelsRemapped) {
  const auto p = write_temp("zeroone.csv", "a,b,label\n1,2,0\n3,4,1\n");
  CsvOptions o;
  o.has_header = true;
  std::vector<std::string> notes;
  const Dataset d = load_csv(p, o, &notes);
  EXPECT_EQ(d.y, (std::vector<int>{-1, 1}));
  EXPECT_FALSE(notes.empty());
}

TEST(LoadCsv, LabelColumnSelectable) {
  const auto p = write_temp("first.csv", "1,0.5,0.25\n-1,1.5,2.5\n");
  CsvOptions o;
  o.label_column = 0;
  const Dataset d = load_csv(p, o);
  EXPECT_EQ(d.y, (std::vector<int>{1, -1}));
  EXPECT_EQ(d.X(1, 1), 2.5);
}

TEST(LoadCsv, BadCellNamesRowAndColumn) {
  const auto p = write_temp("bad.csv", "1,2,1\n3,oops,-1\n");
  try {
    load_csv(p);
    FAIL();
  } catch (const ParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("line 2"), std::string::npos) << what;
    EXPECT_NE(what.find("column 2"), std::string::npos) << what;
  }
  EXPECT_THROW(load_csv(write_temp("label.csv", "1,2,3\n")), ParseError);
  EXPECT_THROW(load_csv(fs::temp_directory_path() / "droc_missing.csv"), ParseError);
}

TEST(LoadCsv, SingleClassNoted) {
  std::vector<std::string> notes;
  const Dataset d = load_csv(write_temp("single.csv", "1,1\n2,1\n"), {}, &notes);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_FALSE(notes.empty());
  EXPECT_THROW(validate(d, true), DegenerateData);
}

TEST(LoadLibsvm, DenseRows) {
  const auto p = write_temp("a.svm", "+1 1:0.5 3:2\n-1\n# comment\n-1 2:1.5\n");
  const Dataset d = load_libsvm(p);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 3u);
  EXPECT_EQ(d.X(0, 0), 0.5);
  EXPECT_EQ(d.X(0, 1), 0.0);
  EXPECT_EQ(d.X(0, 2), 2.0);
  EXPECT_EQ(d.y[0], 1);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(d.X(1, c), 0.0);
  EXPECT_EQ(d.y[1], -1);
  EXPECT_EQ(d.X(2, 1), 1.5);
}

TEST(LoadLibsvm, ZeroIndexRejected) {
  try {
    load_libsvm(write_temp("zero.svm", "1 1:2\n1 0:1\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(WriteCsv, RoundTrip) {
  Dataset d;
  const double r0[2] = {0.1, -3.0}, r1[2] = {1e-17, 2.5};
  d.X.push_row(r0);
  d.X.push_row(r1);
  d.y = {1, -1};
  const auto p = fs::temp_directory_path() / "droc_test_data_out.csv";
  write_csv(d, p, true);
  CsvOptions o;
  o.has_header = true;
  const Dataset back = load_csv(p, o);
  EXPECT_EQ(back.X.data(), d.X.data());
  EXPECT_EQ(back.y, d.y);
}

TEST(Standardize, Properties) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z(5, 3);
  Dataset d;
  for (int i = 0; i < 50; ++i) {
    const double row[3] = {z(gen), 7.0, z(gen) * 100};
    d.X.push_row(row);
    d.y.push_back(i % 2 ? 1 : -1);
  }
  const auto params = standardize_fit(d);
  Dataset s = d;
  s.X = standardize_apply(params, d.X);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0;
    for (std::size_t r = 0; r < s.size(); ++r) mean += s.X(r, c);
    EXPECT_NEAR(mean / s.size(), 0.0, 1e-12);
  }
  for (std::size_t r = 0; r < s.size(); ++r) EXPECT_EQ(s.X(r, 1), 0.0);
  const auto again = standardize_fit(s);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(again.mean[c], 0.0, 1e-12);
    EXPECT_NEAR(again.scale[c], 1.0, 1e-12);
  }
}

TEST(Synth1, ShapeFlipsAndRegions) {
  for (std::uint64_t seed : {1, 2, 99}) {
    const auto r = gen_synth1(seed);
    EXPECT_EQ(r.data.size(), 300u);
    EXPECT_EQ(r.data.dim(), 2u);
    EXPECT_EQ(r.flipped.size(), 30u);
    EXPECT_EQ(std::set<std::size_t>(r.flipped.begin(), r.flipped.end()).size(), 30u);
    std::vector<char> flipped(300, 0);
    for (auto i : r.flipped) flipped[i] = 1;
    std::size_t neg_side = 0;
    for (std::size_t i = 0; i < 300; ++i) {
      const double x1 = r.data.X(i, 0);
      const int clean = flipped[i] ? -r.data.y[i] : r.data.y[i];
      EXPECT_EQ(clean, x1 > 0 ? 1 : -1);
      if (x1 < 0) ++neg_side;
    }
    // The first 150 draws come from the left mixture.
    EXPECT_EQ(neg_side, 150u);
  }
}

TEST(Synth2, ShapeAndPosterior) {
  const auto r = gen_synth2(7);
  EXPECT_EQ(r.data.size(), 200u);
  EXPECT_EQ(r.data.count(1), 100u);
  EXPECT_EQ(r.data.count(-1), 100u);
  EXPECT_EQ(r.oracle.means_positive.size(), 10u);
  EXPECT_EQ(r.oracle.means_negative.size(), 10u);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-3, 4);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> x{u(gen), u(gen)};
    const auto p = r.oracle.class_posteriors(x);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
  }
  // A far-away positive center dominates its own neighbourhood.
  PosteriorOracle o;
  o.means_positive.assign(10, {5.0, 5.0});
  o.means_negative.assign(10, {-5.0, -5.0});
  const std::vector<double> at{5.0, 5.0};
  EXPECT_GT(o.posterior(at), 0.5);
}

TEST(DiagonalBand, ShapeAndFlips) {
  for (std::uint64_t seed : {1, 3, 10}) {
    const auto r = gen_diagonal_band(seed);
    EXPECT_EQ(r.data.size(), 400u);
    for (double v : r.data.X.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (!r.short_band) EXPECT_EQ(r.flipped.size(), kBandFlips);
    std::vector<char> flipped(400, 0);
    for (auto i : r.flipped) {
      flipped[i] = 1;
      EXPECT_LT(diagonal_distance(r.data.X.row(i)), kBandWidth / 2);
    }
    for (std::size_t i = 0; i < 400; ++i) {
      const auto x = r.data.X.row(i);
      const int clean = x[1] > x[0] ? 1 : -1;
      EXPECT_EQ(r.data.y[i], flipped[i] ? -clean : clean);
    }
  }
}

TEST(Generators, DeterministicPerSeed) {
  EXPECT_EQ(gen_synth1(4).data.X.data(), gen_synth1(4).data.X.data());
  EXPECT_EQ(gen_synth2(4).data.X.data(), gen_synth2(4).data.X.data());
  EXPECT_EQ(gen_diagonal_band(4).data.y, gen_diagonal_band(4).data.y);
  EXPECT_NE(gen_synth1(4).data.X.data(), gen_synth1(5).data.X.data());
}

TEST(Bayes, Decision) {
  EXPECT_EQ(bayes_decision(0.9, 0.2), 1);
  EXPECT_EQ(bayes_decision(0.5, 0.3), 0);
  EXPECT_EQ(bayes_decision(0.1, 0.2), -1);
}

}  // namespace
}  // namespace droc
