// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "test_util.hpp"
#include "tfmd/metrics.hpp"

using namespace tfmd;
using tfmd::testing::expect_code;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

// Random distribution rows; values drawn from a coarse lattice so ties occur.
std::vector<std::vector<double>> random_scores(std::mt19937_64& rng, std::size_t n,
                                               std::size_t k) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(k));
  for (auto& row : rows) {
    double s = 0;
    for (double& v : row) {
      v = static_cast<double>(1 + rng() % 4);
      s += v;
    }
    for (double& v : row) v /= s;
  }
  return rows;
}

bool same(double a, double b, double tol) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= tol;
}

}  // namespace

TEST(Confusion, PerfectPredictions) {
  const std::vector<std::size_t> y{0, 1, 2, 2, 1};
  const ConfusionSummary s = confusion_metrics(y, y, 3);
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.macro_precision, 1.0);
  EXPECT_EQ(s.macro_recall, 1.0);
  EXPECT_EQ(s.macro_f1, 1.0);
}

TEST(Confusion, HandTalliedTwoByTwo) {
  const std::vector<std::size_t> pred{0, 0, 1, 1}, truth{0, 1, 0, 1};
  const ConfusionSummary s = confusion_metrics(pred, truth, 2);
  EXPECT_EQ(s.accuracy, 0.5);
  for (const auto& c : s.per_class) {
    EXPECT_EQ(c.precision, 0.5);
    EXPECT_EQ(c.recall, 0.5);
  }
  EXPECT_EQ(s.macro_f1, 0.5);
}

TEST(Confusion, AbsentClassExcludedFromMacro) {
  // Class 2 is neither true nor predicted.
  const std::vector<std::size_t> pred{0, 1, 1}, truth{0, 1, 0};
  const ConfusionSummary s = confusion_metrics(pred, truth, 3);
  EXPECT_DOUBLE_EQ(s.macro_recall, (0.5 + 1.0) / 2);
}

TEST(Confusion, NeverPredictedClassScoresZero) {
  const std::vector<std::size_t> pred{0, 0, 0}, truth{0, 0, 1};
  const ConfusionSummary s = confusion_metrics(pred, truth, 2);
  EXPECT_EQ(s.per_class[1].precision, 0.0);
  EXPECT_EQ(s.per_class[1].recall, 0.0);
  EXPECT_EQ(s.per_class[1].f1, 0.0);
}

TEST(Confusion, Errors) {
  const std::vector<std::size_t> a{0, 1}, b{0};
  expect_code(ErrorCode::kInput, [&] { confusion_metrics(a, b, 2); });
  expect_code(ErrorCode::kInput, [&] { confusion_metrics({}, {}, 2); });
  expect_code(ErrorCode::kInput, [&] { confusion_metrics(a, a, 1); });
}

TEST(Auc, SeparatedAndConstant) {
  const Matrix s = from_rows({{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.1, 0.9}});
  const std::vector<std::size_t> y{0, 0, 1, 1};
  const RankingSummary auc = roc_auc_ovr(s, y);
  EXPECT_EQ(auc.per_class[0], 1.0);
  EXPECT_EQ(auc.per_class[1], 1.0);
  const Matrix c = from_rows({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}});
  const std::vector<std::size_t> y2{0, 1, 1};
  EXPECT_EQ(roc_auc_ovr(c, y2).per_class[0], 0.5);
}

TEST(Auc, UndefinedClassesExcluded) {
  const Matrix s = from_rows({{0.6, 0.3, 0.1}, {0.2, 0.7, 0.1}});
  const std::vector<std::size_t> y{0, 1};
  const RankingSummary r = roc_auc_ovr(s, y);
  EXPECT_TRUE(std::isnan(r.per_class[2]));
  EXPECT_EQ(r.macro, 1.0);
}

TEST(Auc, RejectsNonDistributionRows) {
  const Matrix s = from_rows({{0.6, 0.6}, {0.5, 0.5}});
  const std::vector<std::size_t> y{0, 1};
  expect_code(ErrorCode::kInput, [&] { roc_auc_ovr(s, y); });
  expect_code(ErrorCode::kInput, [&] { pr_auc_ovr(s, y); });
  const Matrix neg = from_rows({{1.5, -0.5}, {0.5, 0.5}});
  expect_code(ErrorCode::kInput, [&] { roc_auc_ovr(neg, y); });
}

TEST(Aupr, PerfectAndLastRanked) {
  const Matrix s = from_rows({{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.1, 0.9}});
  const std::vector<std::size_t> y{0, 0, 1, 1};
  EXPECT_EQ(pr_auc_ovr(s, y).per_class[1], 1.0);
  // One positive for class 1, ranked last of five.
  const Matrix t = from_rows({{0.1, 0.9}, {0.2, 0.8}, {0.3, 0.7}, {0.4, 0.6}, {0.5, 0.5}});
  const std::vector<std::size_t> y2{0, 0, 0, 0, 1};
  EXPECT_NEAR(pr_auc_ovr(t, y2).per_class[1], 1.0 / 5, 1e-15);
}

TEST(MetricsOracle, SmallRandomInstancesMatchBruteForce) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + rng() % 3;
    const std::size_t n = 1 + rng() % 10;
    const auto rows = random_scores(rng, n, k);
    std::vector<std::size_t> truth(n);
    for (auto& t : truth) t = rng() % k;
    const Matrix scores = from_rows(rows);
    const MetricsReport rep = evaluate(scores, truth);
    const std::vector<std::size_t> pred = argmax_rows(scores);
    for (std::size_t c = 0; c < k; ++c) {
      const oracle::BruteClass b = oracle::brute_class(rows, truth, pred, c);
      const ClassMetrics& m = rep.per_class[c];
      EXPECT_TRUE(same(m.precision, b.precision, 1e-12));
      EXPECT_TRUE(same(m.recall, b.recall, 1e-12));
      EXPECT_TRUE(same(m.f1, b.f1, 1e-12));
      EXPECT_TRUE(same(m.auc, b.auc, 1e-12)) << m.auc << " vs " << b.auc;
      EXPECT_TRUE(same(m.aupr, b.aupr, 1e-12)) << m.aupr << " vs " << b.aupr;
    }
  }
}

TEST(MetricsProperty, PermutationInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 4, n = 5 + rng() % 30;
    auto rows = random_scores(rng, n, k);
    std::vector<std::size_t> truth(n);
    for (auto& t : truth) t = rng() % k;
    const MetricsReport a = evaluate(from_rows(rows), truth);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<double>> rows2(n);
    std::vector<std::size_t> truth2(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows2[i] = rows[perm[i]];
      truth2[i] = truth[perm[i]];
    }
    const MetricsReport b = evaluate(from_rows(rows2), truth2);
    // Argmax ties resolve by class index, so predictions follow the rows.
    EXPECT_NEAR(a.accuracy, b.accuracy, 1e-12);
    EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-12);
    EXPECT_NEAR(a.macro_auc, b.macro_auc, 1e-12);
    EXPECT_NEAR(a.macro_aupr, b.macro_aupr, 1e-12);
  }
}

TEST(MetricsProperty, RelabelingPermutesPerClass) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 3, n = 12;
    // Continuous scores avoid argmax ties, which break by class index.
    std::vector<std::vector<double>> rows(n, std::vector<double>(k));
    for (auto& row : rows) {
      double s = 0;
      for (double& v : row) s += (v = std::uniform_real_distribution<double>(0.1, 1)(rng));
      for (double& v : row) v /= s;
    }
    std::vector<std::size_t> truth(n);
    for (auto& t : truth) t = rng() % k;
    const std::vector<std::size_t> perm{2, 0, 1};
    std::vector<std::vector<double>> rows2(n, std::vector<double>(k));
    std::vector<std::size_t> truth2(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) rows2[i][perm[c]] = rows[i][c];
      truth2[i] = perm[truth[i]];
    }
    const MetricsReport a = evaluate(from_rows(rows), truth);
    const MetricsReport b = evaluate(from_rows(rows2), truth2);
    for (std::size_t c = 0; c < k; ++c) {
      EXPECT_TRUE(same(a.per_class[c].f1, b.per_class[perm[c]].f1, 1e-12));
      EXPECT_TRUE(same(a.per_class[c].auc, b.per_class[perm[c]].auc, 1e-12));
    }
    EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-12);
    EXPECT_NEAR(a.macro_aupr, b.macro_aupr, 1e-12);
  }
}

TEST(MetricsProperty, BinaryMacroAucIsClassicAuc) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng() % 20;
    std::vector<std::vector<double>> rows(n);
    std::vector<std::size_t> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::uniform_real_distribution<double>(0, 1)(rng);
      rows[i] = {1 - p, p};
      truth[i] = i < 2 ? i : rng() % 2;
    }
    const auto pred = argmax_rows(from_rows(rows));
    const double classic = oracle::brute_class(rows, truth, pred, 1).auc;
    EXPECT_NEAR(roc_auc_ovr(from_rows(rows), truth).macro, classic, 1e-12);
  }
}

TEST(MetricsProperty, BoundedInUnitInterval) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 5, n = 3 + rng() % 40;
    std::vector<std::size_t> truth(n);
    for (auto& t : truth) t = rng() % k;
    const MetricsReport r = evaluate(from_rows(random_scores(rng, n, k)), truth);
    for (double v : {r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1, r.macro_auc,
                     r.macro_aupr}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(MacroOver, RestrictsToMask) {
  const Matrix s = from_rows({{0.9, 0.05, 0.05}, {0.1, 0.8, 0.1}, {0.1, 0.8, 0.1}});
  const std::vector<std::size_t> y{0, 1, 2};
  const MetricsReport r = evaluate(s, y);
  const SubsetMacro t = macro_over(r, {false, true, true});
  EXPECT_EQ(t.classes, 2u);
  EXPECT_DOUBLE_EQ(t.recall, 0.5);
  EXPECT_DOUBLE_EQ(t.precision, 0.25);
  const SubsetMacro none = macro_over(r, {false, false, false});
  EXPECT_EQ(none.classes, 0u);
}

TEST(Reports, SummaryAndPerClassFormat) {
  const Matrix s = from_rows({{0.9, 0.1}, {0.2, 0.8}});
  const std::vector<std::size_t> y{0, 1};
  const MetricsReport r = evaluate(s, y);
  std::ostringstream sum, table;
  write_summary(sum, r);
  write_per_class_csv(table, r);
  EXPECT_EQ(sum.str().substr(0, 11), "accuracy=1\n");
  EXPECT_NE(sum.str().find("macro_aupr=1\n"), std::string::npos);
  EXPECT_EQ(table.str(), "class,support,precision,recall,f1,auc,aupr\n0,1,1,1,1,1,1\n1,1,1,1,1,1,1\n");
}
