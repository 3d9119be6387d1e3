// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch Adam training for FusionModel, stratified splitting and batched
// inference. Every reduction runs in a fixed index order, so a run is a pure
// function of (model init, data, split, loss, optimizer config).
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tfmd/datagen.hpp"
#include "tfmd/fusion_model.hpp"
#include "tfmd/losses.hpp"
#include "tfmd/matrix.hpp"

namespace tfmd {

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 256;
  std::size_t epochs = 50;
  // Epochs without validation macro-F1 improvement before stopping. Only
  // active when a validation set is given.
  std::size_t patience = 10;
  // Also train on every pair with the two drugs exchanged.
  bool symmetric = false;
  std::uint64_t shuffle_seed = 0;

  // Throws ErrorCode::kConfig.
  void validate() const;
};

class Adam {
 public:
  Adam(const FusionModel& model, const OptimizerConfig& config);
  // Applies one update and bumps the model version.
  void step(FusionModel& model, const std::vector<Matrix>& grads);

 private:
  OptimizerConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t t_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_macro_f1 = 0.0;  // NaN without a validation set
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // epoch whose parameters the model holds
  bool stopped_early = false;
};

// Throws ErrorCode::kInput on an empty training set and ErrorCode::kNumeric
// when a batch loss is not finite; the message names epoch and batch.
TrainingTrace train(FusionModel& model, std::span<const Record> records,
                    std::span<const std::size_t> train_indices,
                    std::span<const std::size_t> val_indices,
                    const LossSpec& loss, const OptimizerConfig& config);

// Softmax rows for records[indices[i]].
Matrix predict_proba(const FusionModel& model, std::span<const Record> records,
                     std::span<const std::size_t> indices);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Validation receives the remainder 1 - train - test. When stratified, each
// class with n >= 2 samples keeps at least one test and one train sample and
// a single-sample class goes to train. Index lists are sorted ascending.
// Throws ErrorCode::kConfig on fractions outside (0, 1) or summing above 1.
Split make_split(std::span<const std::size_t> labels, std::size_t n_classes,
                 double train_fraction, double test_fraction, bool stratified,
                 std::uint64_t seed);

}  // namespace tfmd
