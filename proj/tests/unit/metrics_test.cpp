// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>

#include "oracles.hpp"
#include "sstg/errors.hpp"
#include "sstg/metrics/metrics.hpp"
#include "sstg/util/rng.hpp"

using namespace sstg;
using namespace sstg::metrics;

namespace {

enum : std::size_t { W, N1, N2, N3, REM };

ConfusionMatrix five_sample() {
  std::vector<std::size_t> preds{W, W, N2, N2, REM}, labels{W, N1, N2, N2, REM};
  return confusion_from(preds, labels);
}

ConfusionMatrix binary(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
  ConfusionMatrix cm;
  cm.counts[0][0] = tp;
  cm.counts[1][1] = tn;
  cm.counts[1][0] = fp;
  cm.counts[0][1] = fn;
  return cm;
}

}  // namespace

TEST(Confusion, FiveSampleTally) {
  auto cm = five_sample();
  EXPECT_EQ(cm.counts[N1][W], 1u);
  EXPECT_EQ(cm.trace(), 4u);
  EXPECT_EQ(cm.total(), 5u);
}

TEST(Confusion, PerfectIsDiagonal) {
  std::vector<std::size_t> v{0, 1, 2, 3, 4, 4, 2};
  auto cm = confusion_from(v, v);
  EXPECT_EQ(cm.trace(), 7u);
  auto m = overall_metrics(cm);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.mf1, 1.0);
  EXPECT_EQ(m.kappa, 1.0);
}

TEST(Confusion, Errors) {
  std::vector<std::size_t> empty, a{0, 1}, b{0}, bad{0, 5};
  EXPECT_THROW(confusion_from(empty, empty), InvalidInput);
  EXPECT_THROW(confusion_from(a, b), InvalidInput);
  EXPECT_THROW(confusion_from(bad, a), InvalidLabel);
  EXPECT_THROW(overall_metrics(ConfusionMatrix{}), InvalidInput);
}

TEST(ClassPrf, FiveSample) {
  auto cm = five_sample();
  auto w = class_prf(cm, W);
  EXPECT_EQ(w.precision, 0.5);
  EXPECT_EQ(w.recall, 1.0);
  EXPECT_NEAR(w.f1, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(w.sensitivity, w.recall);
  auto n1 = class_prf(cm, N1);
  EXPECT_EQ(n1.precision, 0.0);
  EXPECT_EQ(n1.recall, 0.0);
  EXPECT_EQ(n1.f1, 0.0);
  EXPECT_TRUE(n1.present);
  EXPECT_FALSE(class_prf(cm, N3).present);
}

TEST(ClassPrf, PrintedSpecificityKept) {
  auto cm = five_sample();
  auto w = class_prf(cm, W);
  // TN = 3, FP = 1, TP + FN = 1
  EXPECT_EQ(w.specificity, 0.75);
  EXPECT_EQ(w.specificity_printed, 3.0);
}

TEST(Overall, FiveSample) {
  auto m = overall_metrics(five_sample());
  EXPECT_NEAR(m.accuracy, 0.8, 1e-15);
  EXPECT_NEAR(m.per_class_f1[W], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(m.per_class_f1[N1], 0.0);
  EXPECT_EQ(m.per_class_f1[N2], 1.0);
  EXPECT_EQ(m.per_class_f1[REM], 1.0);
  EXPECT_FALSE(m.present[N3]);
  EXPECT_NEAR(m.mf1, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.kappa, 0.52 / 0.72, 1e-12);
  EXPECT_NEAR(m.kappa, 0.7222, 1e-4);
}

TEST(Kappa, BinaryExample) {
  auto cm = binary(40, 45, 5, 10);
  EXPECT_NEAR(kappa_multiclass(cm), 0.7, 1e-12);
  EXPECT_NEAR(kappa_binary_closed_form(40, 45, 5, 10), 0.7, 1e-12);
}

TEST(Kappa, ClosedFormAgreesOnRandomBinary) {
  Rng rng(17);
  int tested = 0;
  while (tested < 1000) {
    const auto tp = rng.below(60), tn = rng.below(60), fp = rng.below(60), fn = rng.below(60);
    const double row0 = tp + fn, row1 = fp + tn, col0 = tp + fp, col1 = fn + tn;
    if (row0 == 0 || row1 == 0 || col0 == 0 || col1 == 0) continue;
    EXPECT_NEAR(kappa_multiclass(binary(tp, tn, fp, fn)), kappa_binary_closed_form(tp, tn, fp, fn), 1e-12);
    ++tested;
  }
}

TEST(Kappa, Degenerate) {
  ConfusionMatrix all_w;
  all_w.counts[W][W] = 10;
  EXPECT_EQ(kappa_multiclass(all_w), 1.0);
}

TEST(Kappa, ChanceLevel) {
  Rng rng(3);
  std::vector<std::size_t> p, t;
  for (int i = 0; i < 100000; ++i) {
    p.push_back(rng.below(5));
    t.push_back(static_cast<std::size_t>(i % 5));
  }
  EXPECT_LT(std::abs(overall_metrics(confusion_from(p, t)).kappa), 0.02);
}

TEST(Metrics, MatchCountingOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    const std::size_t classes = 1 + rng.below(5);
    std::vector<std::size_t> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng.below(classes);
      p[i] = rng.uniform() < 0.6 ? t[i] : rng.below(5);
    }
    const auto cm = confusion_from(p, t);
    const auto ref = oracle::count_metrics(p, t);
    const auto m = overall_metrics(cm);
    ASSERT_NEAR(m.accuracy, ref.acc, 1e-12);
    ASSERT_NEAR(m.mf1, ref.mf1, 1e-12);
    ASSERT_NEAR(m.kappa, ref.kappa, 1e-12);
    ASSERT_NEAR(m.macro_sensitivity, ref.macro_sens, 1e-12);
    ASSERT_NEAR(m.macro_specificity, ref.macro_spec, 1e-12);
    for (std::size_t c = 0; c < K; ++c) {
      const auto cp = class_prf(cm, c);
      ASSERT_NEAR(cp.precision, ref.pr[c], 1e-12);
      ASSERT_NEAR(cp.recall, ref.re[c], 1e-12);
      ASSERT_NEAR(cp.f1, ref.f1[c], 1e-12);
      ASSERT_NEAR(cp.specificity, ref.spec[c], 1e-12);
      ASSERT_EQ(cp.present, ref.present[c]);
      ASSERT_GE(cp.f1, 0.0);
      ASSERT_LE(cp.f1, 1.0);
    }
    ASSERT_LE(m.kappa, 1.0);
  }
}

TEST(Metrics, PermutationInvariance) {
  Rng rng(5);
  std::vector<std::size_t> perm{0, 1, 2, 3, 4};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> p(80), t(80);
    for (std::size_t i = 0; i < 80; ++i) {
      t[i] = rng.below(5);
      p[i] = rng.uniform() < 0.5 ? t[i] : rng.below(5);
    }
    rng.shuffle(perm);
    std::vector<std::size_t> pp(80), tp(80);
    for (std::size_t i = 0; i < 80; ++i) {
      pp[i] = perm[p[i]];
      tp[i] = perm[t[i]];
    }
    auto a = overall_metrics(confusion_from(p, t)), b = overall_metrics(confusion_from(pp, tp));
    EXPECT_NEAR(a.accuracy, b.accuracy, 1e-12);
    EXPECT_NEAR(a.mf1, b.mf1, 1e-12);
    EXPECT_NEAR(a.kappa, b.kappa, 1e-12);
  }
}

TEST(Metrics, RowNormalizedAndReport) {
  auto cm = five_sample();
  auto rn = cm.row_normalized();
  EXPECT_EQ(rn[N2][N2], 1.0);
  EXPECT_EQ(rn[N3][N3], 0.0);
  EXPECT_EQ(rn[N1][W], 1.0);
  auto j = metrics_report(cm);
  EXPECT_TRUE(j.contains("overall"));
  EXPECT_TRUE(j.contains("per_class"));
  EXPECT_EQ(j["confusion"]["raw"][1][0], 1u);
  EXPECT_EQ(j["confusion"]["row_normalized"][2][2], 1.0);
  EXPECT_EQ(j["per_class"]["W"]["precision"], 0.5);
  ConfusionMatrix sum = cm;
  sum += cm;
  EXPECT_EQ(sum.total(), 10u);
}
