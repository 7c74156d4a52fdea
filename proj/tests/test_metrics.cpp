#include <array>
#include <cstdio>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"
#include "xrec/metrics.hpp"
#include "xrec/sweep.hpp"

using namespace xrec;
using testkit::Rational;

namespace {

LabeledFeatures toy(std::size_t n) {
  LabeledFeatures d;
  d.features = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(n));
  d.targets = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "n%03zu", i);
    d.ids.push_back(id);
    d.features(0, static_cast<Eigen::Index>(i)) = static_cast<double>(i % 2);
    d.targets(static_cast<Eigen::Index>(i % 2), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return d;
}

/// A model that always predicts class 0.
FusionModeld constant_model(const LabeledFeatures& train, std::uint64_t) {
  FusionModeld m(train.features.rows(), 1, 1, train.targets.rows(), 1);
  for (auto& w : m.params().weights) w.setZero();
  m.params().biases[3](0) = 5.0;
  return m;
}

}  // namespace

TEST(Metrics, WorkedTwoClassExample) {
  const std::vector<LabelSet> truth{LabelSet::from_indices(2, {0}), LabelSet::from_indices(2, {0, 1})};
  const std::vector<LabelSet> pred{LabelSet::from_indices(2, {0, 1}), LabelSet::from_indices(2, {0})};
  const auto c = confusion_counts(pred, truth);
  EXPECT_EQ(c.tp, (std::vector<std::int64_t>{2, 0}));
  EXPECT_EQ(c.fp, (std::vector<std::int64_t>{0, 1}));
  EXPECT_EQ(c.fn, (std::vector<std::int64_t>{0, 1}));
  const auto s = score(c);
  EXPECT_EQ(s.micro_precision, 2.0 / 3.0);
  EXPECT_EQ(s.micro_recall, 2.0 / 3.0);
  EXPECT_EQ(s.micro_f1, 2.0 / 3.0);
  EXPECT_EQ(s.macro_precision, 0.5);
  EXPECT_EQ(s.macro_recall, 0.5);
  EXPECT_EQ(s.macro_f1, 0.5);
  EXPECT_EQ(micro_f1(c), 2.0 / 3.0);
  EXPECT_EQ(macro_f1(c), 0.5);
  EXPECT_EQ(s.undefined_classes, 0u);
}

TEST(Metrics, PerfectPrediction) {
  const std::vector<LabelSet> truth{LabelSet::from_indices(3, {0}), LabelSet::from_indices(3, {1, 2}),
                                    LabelSet::from_indices(3, {0, 2})};
  const auto c = confusion_counts(truth, truth);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(c.fp[k], 0);
    EXPECT_EQ(c.fn[k], 0);
  }
  const auto s = score(c);
  EXPECT_EQ(s.micro_f1, 1.0);
  EXPECT_EQ(s.macro_f1, 1.0);
}

TEST(Metrics, AbsentClassScoresZeroInMacroAverage) {
  const std::vector<LabelSet> truth{LabelSet::from_indices(2, {0})};
  const auto s = score(confusion_counts(truth, truth));
  EXPECT_EQ(s.micro_f1, 1.0);
  EXPECT_EQ(s.macro_precision, 0.5);
  EXPECT_EQ(s.undefined_classes, 1u);
}

TEST(Metrics, SingleClassMicroEqualsMacro) {
  const std::vector<LabelSet> truth{LabelSet::from_indices(1, {0}), LabelSet(1), LabelSet::from_indices(1, {0})};
  const std::vector<LabelSet> pred{LabelSet::from_indices(1, {0}), LabelSet::from_indices(1, {0}), LabelSet(1)};
  const auto s = score(confusion_counts(pred, truth));
  EXPECT_EQ(s.micro_f1, s.macro_f1);
  EXPECT_EQ(s.micro_precision, s.macro_precision);
  EXPECT_EQ(s.micro_f1, 0.5);
}

TEST(Metrics, AllZeroCountsFlagged) {
  const std::vector<LabelSet> none{LabelSet(2), LabelSet(2)};
  const auto s = score(confusion_counts(none, none));
  EXPECT_TRUE(s.all_zero);
  EXPECT_EQ(s.micro_f1, 0.0);
  EXPECT_EQ(s.macro_f1, 0.0);
}

TEST(Metrics, LengthMismatchRejected) {
  const std::vector<LabelSet> a{LabelSet(2)}, b{LabelSet(2), LabelSet(2)};
  EXPECT_THROW(confusion_counts(a, b), ValidationError);
  const std::vector<LabelSet> c{LabelSet(3)};
  EXPECT_THROW(confusion_counts(c, a), ValidationError);
}

// Every assignment of TP/FP/FN/TN to the 6 (candidate, class) pairs.
TEST(Metrics, ExhaustiveOracleThreeByTwo) {
  for (int code = 0; code < 4096; ++code) {
    std::vector<LabelSet> pred(3, LabelSet(2)), truth(3, LabelSet(2));
    std::array<long long, 2> tp{}, fp{}, fn{};
    for (int pair = 0; pair < 6; ++pair) {
      const int outcome = (code >> (2 * pair)) & 3;  // 0 TP, 1 FP, 2 FN, 3 TN
      const std::size_t i = static_cast<std::size_t>(pair / 2), k = static_cast<std::size_t>(pair % 2);
      pred[i].set(k, outcome <= 1);
      truth[i].set(k, outcome == 0 || outcome == 2);
      if (outcome == 0) ++tp[k];
      if (outcome == 1) ++fp[k];
      if (outcome == 2) ++fn[k];
    }
    const auto c = confusion_counts(pred, truth);
    for (std::size_t k = 0; k < 2; ++k) {
      ASSERT_EQ(c.tp[k], tp[k]);
      ASSERT_EQ(c.fp[k], fp[k]);
      ASSERT_EQ(c.fn[k], fn[k]);
      ASSERT_EQ(c.tn[k], 3 - tp[k] - fp[k] - fn[k]);
    }
    const Rational micro_p = testkit::reduced(tp[0] + tp[1], tp[0] + tp[1] + fp[0] + fp[1]);
    const Rational micro_r = testkit::reduced(tp[0] + tp[1], tp[0] + tp[1] + fn[0] + fn[1]);
    const Rational macro_p =
        (testkit::reduced(tp[0], tp[0] + fp[0]) + testkit::reduced(tp[1], tp[1] + fp[1])) * Rational{1, 2};
    const Rational macro_r =
        (testkit::reduced(tp[0], tp[0] + fn[0]) + testkit::reduced(tp[1], tp[1] + fn[1])) * Rational{1, 2};
    const auto s = score(c);
    // Every quantity here is a ratio of small integers; the correctly
    // rounded value is what a single division produces.
    ASSERT_EQ(s.micro_precision, micro_p.value()) << code;
    ASSERT_EQ(s.micro_recall, micro_r.value()) << code;
    ASSERT_EQ(s.macro_precision, macro_p.value()) << code;
    ASSERT_EQ(s.macro_recall, macro_r.value()) << code;
    ASSERT_EQ(s.micro_f1, testkit::f1_oracle(micro_p, micro_r).value()) << code;
    ASSERT_EQ(s.macro_f1, testkit::f1_oracle(macro_p, macro_r).value()) << code;
    ASSERT_GE(s.micro_f1, 0.0);
    ASSERT_LE(s.macro_f1, 1.0);
    if (tp[0] + tp[1] + fp[0] + fp[1] == tp[0] + tp[1] + fn[0] + fn[1]) {
      ASSERT_EQ(s.micro_precision, s.micro_recall) << code;
    }
  }
}

TEST(Split, RatioArithmetic) {
  const auto data = toy(10);
  const auto split = split_indices(data, 0.5, 1);
  EXPECT_EQ(split.train.size(), 5u);
  EXPECT_EQ(split.test.size(), 5u);
  std::set<std::size_t> all(split.train.begin(), split.train.end());
  all.insert(split.test.begin(), split.test.end());
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(split_indices(data, 0.3, 1).train.size(), 3u);
}

TEST(Split, DeterministicNestedAndSeeded) {
  const auto data = toy(40);
  const auto a = split_indices(data, 0.5, 7), b = split_indices(data, 0.5, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(split_indices(data, 0.5, 8).train, a.train);
  const auto small = split_indices(data, 0.2, 7), large = split_indices(data, 0.8, 7);
  const std::set<std::size_t> big(large.train.begin(), large.train.end());
  for (auto i : small.train) EXPECT_TRUE(big.count(i));
}

TEST(Split, StratifiedKeepsClassProportions) {
  const auto data = toy(20);
  const auto split = split_indices(data, 0.5, 3, true);
  int ones = 0;
  for (auto i : split.train) ones += data.targets(1, static_cast<Eigen::Index>(i)) > 0;
  EXPECT_EQ(split.train.size(), 10u);
  EXPECT_EQ(ones, 5);
}

TEST(Sweep, RatioRowsPerSeedPlusMeans) {
  const auto data = toy(30);
  const auto ratios = default_ratios();
  ASSERT_EQ(ratios.size(), 9u);
  EXPECT_DOUBLE_EQ(ratios.front(), 0.1);
  EXPECT_DOUBLE_EQ(ratios.back(), 0.9);
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto report = sweep_train_ratio(data, constant_model, ratios, seeds);
  std::size_t seed_rows = 0, mean_rows = 0;
  for (const auto& r : report.rows) (r.seed == "mean" ? mean_rows : seed_rows)++;
  EXPECT_EQ(seed_rows, 18u);
  EXPECT_EQ(mean_rows, 9u);
  // Always predicting class 0 on a balanced set: precision 1/2, recall 1/2.
  for (const auto& r : report.rows) EXPECT_NEAR(r.micro_f1, 0.5, 0.2);
}

TEST(Sweep, InvalidRatiosSkippedWithWarning) {
  const auto data = toy(10);
  const std::vector<double> ratios{0.0, 0.5, 1.0, 1.5, 0.01};
  const std::vector<std::uint64_t> seeds{1};
  const auto report = sweep_train_ratio(data, constant_model, ratios, seeds);
  std::size_t seed_rows = 0;
  for (const auto& r : report.rows) seed_rows += r.seed != "mean";
  EXPECT_EQ(seed_rows, 1u);
  EXPECT_GE(report.warnings.size(), 4u);
}

TEST(Sweep, DimensionRowsPerSeed) {
  const auto data = toy(20);
  const std::vector<std::size_t> widths{16, 64, 256};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::size_t> seen;
  const auto report = sweep_dimension(
      data, [&](const LabeledFeatures& train, std::size_t, std::uint64_t s) { return constant_model(train, s); },
      widths, seeds);
  std::size_t seed_rows = 0;
  for (const auto& r : report.rows) seed_rows += r.seed != "mean";
  EXPECT_EQ(seed_rows, 9u);
  EXPECT_EQ(report.rows.size(), 12u);
  EXPECT_THROW(sweep_dimension(data, nullptr, std::vector<std::size_t>{}, seeds), ValidationError);
}

TEST(Sweep, CsvHeaderAndRoundTrip) {
  SweepReport report;
  report.rows.push_back({"0.5", "1", 0.75, 0.5, 12.0});
  report.rows.push_back({"0.5", "mean", 0.75, 0.5, 0.0});
  const auto csv = report.format_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "param,seed,micro_f1,macro_f1,wall_ms");
  const auto back = SweepReport::parse_csv(csv);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].micro_f1, 0.75);
  EXPECT_EQ(back.rows[0].wall_ms, 0.0);
  EXPECT_EQ(back.format_csv(), csv);
  EXPECT_EQ(SweepReport::parse_csv(report.format_csv(true, "config_hash=1")).rows[0].wall_ms, 12.0);
  EXPECT_EQ(back.mean("0.5").first, 0.75);
}
