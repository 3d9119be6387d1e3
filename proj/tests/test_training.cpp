// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "test_util.hpp"
#include "tfmd/metrics.hpp"
#include "tfmd/training.hpp"

using namespace tfmd;
using tfmd::testing::expect_code;

namespace {

DatasetSpec toy_spec(std::uint64_t seed) {
  DatasetSpec s;
  s.n_classes = 4;
  s.n_samples = 240;
  s.cir = 4.0;
  s.n_drugs = 30;
  s.embed_dims = {8, 8, 8, 8};
  s.seed = seed;
  return s;
}

ModelConfig toy_model(std::size_t classes) {
  ModelConfig c;
  c.embed_dims = {8, 8, 8, 8};
  c.pool_window = 4;
  c.hidden_dim = 8;
  c.k_stages = 2;
  c.classifier_hidden = {16, 16, 8};
  c.n_classes = classes;
  return c;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

}  // namespace

TEST(Optimizer, Validation) {
  OptimizerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lr = -1;
  expect_code(ErrorCode::kConfig, [&] { c.validate(); });
  c = OptimizerConfig{};
  c.beta1 = 1.0;
  expect_code(ErrorCode::kConfig, [&] { c.validate(); });
  c = OptimizerConfig{};
  c.batch_size = 0;
  expect_code(ErrorCode::kConfig, [&] { c.validate(); });
  c = OptimizerConfig{};
  c.eps = 0;
  expect_code(ErrorCode::kConfig, [&] { c.validate(); });
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  ModelConfig c = toy_model(3);
  FusionModel m = FusionModel::init(c, 1);
  const FusionModel before = m;
  OptimizerConfig oc;
  oc.lr = 0.01;
  Adam adam(m, oc);
  std::vector<Matrix> g;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (const Tensor& t : m.parameters()) {
    g.emplace_back(t.value.rows(), t.value.cols());
    for (double& v : g.back().data()) v = n(rng);
  }
  const auto version = m.version();
  adam.step(m, g);
  EXPECT_GT(m.version(), version);
  // Bias correction makes the first update lr * g / (|g| + eps').
  for (std::size_t t = 0; t < g.size(); ++t) {
    for (std::size_t i = 0; i < g[t].size(); ++i) {
      const double gi = g[t].data()[i];
      const double delta = m.parameters()[t].value.data()[i] - before.parameters()[t].value.data()[i];
      EXPECT_NEAR(delta, -0.01 * gi / (std::abs(gi) + 1e-8), 1e-12);
    }
  }
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  const Dataset d = generate_dataset(toy_spec(3));
  FusionModel m = FusionModel::init(toy_model(d.n_classes), 5);
  const FusionModel before = m;
  OptimizerConfig oc;
  oc.lr = 0.0;
  oc.epochs = 3;
  oc.batch_size = 32;
  const LossSpec loss(LossKind::kCE, {});
  const auto idx = all_indices(d.records.size());
  const TrainingTrace t = train(m, d.records, idx, {}, loss, oc);
  ASSERT_EQ(t.epochs.size(), 3u);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    EXPECT_EQ(m.parameters()[i].value, before.parameters()[i].value);
  }
  EXPECT_EQ(t.epochs[0].train_loss, t.epochs[2].train_loss);
  EXPECT_EQ(t.epochs[0].train_accuracy, t.epochs[2].train_accuracy);
  EXPECT_TRUE(std::isnan(t.epochs[0].val_macro_f1));
}

TEST(Train, Deterministic) {
  const Dataset d = generate_dataset(toy_spec(4));
  const ClassStats stats = d.stats();
  OptimizerConfig oc;
  oc.epochs = 3;
  oc.batch_size = 50;
  oc.shuffle_seed = 9;
  oc.symmetric = true;
  const LossSpec loss(LossKind::kTFL, {}, stats);
  const Split s = make_split(d.labels(), d.n_classes, 0.6, 0.2, true, 1);
  FusionModel a = FusionModel::init(toy_model(d.n_classes), 2);
  FusionModel b = FusionModel::init(toy_model(d.n_classes), 2);
  const TrainingTrace ta = train(a, d.records, s.train, s.val, loss, oc);
  const TrainingTrace tb = train(b, d.records, s.train, s.val, loss, oc);
  ASSERT_EQ(ta.epochs.size(), tb.epochs.size());
  for (std::size_t e = 0; e < ta.epochs.size(); ++e) {
    EXPECT_EQ(ta.epochs[e].train_loss, tb.epochs[e].train_loss);
    EXPECT_EQ(ta.epochs[e].val_macro_f1, tb.epochs[e].val_macro_f1);
  }
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value);
  }
}

TEST(Train, LossDecreasesOnLearnableData) {
  const Dataset d = generate_dataset(toy_spec(5));
  FusionModel m = FusionModel::init(toy_model(d.n_classes), 3);
  OptimizerConfig oc;
  oc.epochs = 15;
  oc.batch_size = 32;
  const auto idx = all_indices(d.records.size());
  const TrainingTrace t = train(m, d.records, idx, {}, LossSpec(LossKind::kCE, {}), oc);
  EXPECT_LT(t.epochs.back().train_loss, 0.5 * t.epochs.front().train_loss);
}

TEST(Train, SeparableDataIsFitExactly) {
  DatasetSpec s = toy_spec(6);
  s.noise = {0, 0, 0, 0};
  s.drug_scale = 0.0;
  const Dataset d = generate_dataset(s);
  FusionModel m = FusionModel::init(toy_model(d.n_classes), 3);
  OptimizerConfig oc;
  oc.epochs = 30;
  oc.batch_size = 32;
  const auto idx = all_indices(d.records.size());
  train(m, d.records, idx, {}, LossSpec(LossKind::kCE, {}), oc);
  const Matrix p = predict_proba(m, d.records, idx);
  EXPECT_EQ(evaluate(p, d.labels()).accuracy, 1.0);
}

TEST(Train, EarlyStoppingRestoresBestEpoch) {
  const Dataset d = generate_dataset(toy_spec(7));
  const Split s = make_split(d.labels(), d.n_classes, 0.5, 0.25, true, 3);
  FusionModel m = FusionModel::init(toy_model(d.n_classes), 4);
  OptimizerConfig oc;
  oc.epochs = 40;
  oc.patience = 2;
  oc.batch_size = 16;
  oc.lr = 0.05;
  const TrainingTrace t = train(m, d.records, s.train, s.val, LossSpec(LossKind::kCE, {}), oc);
  ASSERT_GE(t.best_epoch, 1u);
  ASSERT_LE(t.best_epoch, t.epochs.size());
  double best = -1;
  for (const EpochRecord& e : t.epochs) best = std::max(best, e.val_macro_f1);
  EXPECT_EQ(t.epochs[t.best_epoch - 1].val_macro_f1, best);
  // The held parameters reproduce the best epoch's validation score.
  std::vector<std::size_t> val_labels;
  for (std::size_t i : s.val) val_labels.push_back(d.records[i].label);
  const double f1 = evaluate(predict_proba(m, d.records, s.val), val_labels).macro_f1;
  EXPECT_EQ(f1, best);
  if (t.stopped_early) {
    EXPECT_EQ(t.epochs.size(), t.best_epoch + oc.patience);
  }
}

TEST(Train, Errors) {
  Dataset d = generate_dataset(toy_spec(8));
  FusionModel m = FusionModel::init(toy_model(d.n_classes), 1);
  OptimizerConfig oc;
  oc.epochs = 1;
  const LossSpec loss(LossKind::kCE, {});
  expect_code(ErrorCode::kInput, [&] { train(m, d.records, {}, {}, loss, oc); });
  d.records[0].features_a[0][0] = std::numeric_limits<float>::quiet_NaN();
  const auto idx = all_indices(d.records.size());
  try {
    train(m, d.records, idx, {}, loss, oc);
    ADD_FAILURE() << "expected numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
}

TEST(Predict, RowsAreDistributions) {
  const Dataset d = generate_dataset(toy_spec(9));
  const FusionModel m = FusionModel::init(toy_model(d.n_classes), 1);
  const auto idx = all_indices(d.records.size());
  const Matrix p = predict_proba(m, d.records, idx);
  ASSERT_EQ(p.rows(), d.records.size());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0;
    for (double v : p.row(r)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(MakeBatch, SwappedRowsExchangeDrugs) {
  const Dataset d = generate_dataset(toy_spec(10));
  const std::vector<std::size_t> rows{0, 1};
  const bool swapped[] = {false, true};
  const PairBatch b = make_batch(d.records, rows, swapped);
  EXPECT_EQ(b.rows(), 2u);
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_EQ(b.a[m](0, 0), d.records[0].features_a[m][0]);
    EXPECT_EQ(b.a[m](1, 0), d.records[1].features_b[m][0]);
    EXPECT_EQ(b.b[m](1, 0), d.records[1].features_a[m][0]);
  }
}

TEST(Split, PartitionAndStratification) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t classes = 2 + rng() % 6;
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t n = 1 + rng() % 30;
      for (std::size_t i = 0; i < n; ++i) labels.push_back(c);
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    const double train_f = 0.6 + 0.2 * (trial % 2);
    const Split s = make_split(labels, classes, train_f, 0.2, true, trial);
    std::vector<std::size_t> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
      all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, all_indices(labels.size()));
    for (std::size_t c = 0; c < classes; ++c) {
      const auto count = [&](const std::vector<std::size_t>& part) {
        return std::count_if(part.begin(), part.end(), [&](std::size_t i) { return labels[i] == c; });
      };
      const auto n = std::count(labels.begin(), labels.end(), c);
      if (n == 1) {
        EXPECT_EQ(count(s.train), 1);
      } else {
        EXPECT_GE(count(s.test), 1);
        EXPECT_GE(count(s.train), 1);
        EXPECT_LE(std::abs(count(s.test) - 0.2 * n), 1.0);
      }
    }
    EXPECT_EQ(make_split(labels, classes, train_f, 0.2, true, trial).test, s.test);
  }
}

TEST(Split, Errors) {
  const std::vector<std::size_t> labels{0, 1, 0, 1};
  expect_code(ErrorCode::kConfig, [&] { make_split(labels, 2, 0.9, 0.2, true, 0); });
  expect_code(ErrorCode::kConfig, [&] { make_split(labels, 2, 0.0, 0.2, true, 0); });
  expect_code(ErrorCode::kIndex, [&] { make_split(labels, 1, 0.8, 0.2, true, 0); });
  const Split s = make_split(labels, 2, 0.5, 0.5, false, 0);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_TRUE(s.val.empty());
}
