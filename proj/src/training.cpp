// SPDX-License-Identifier: Apache-2.0
#include "tfmd/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>

#include "tfmd/error.hpp"
#include "tfmd/metrics.hpp"

namespace tfmd {
namespace {

constexpr std::size_t kPredictChunk = 512;

struct Example {
  std::size_t record;
  bool swapped;
};

}  // namespace

void OptimizerConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail(ErrorCode::kConfig, "optim.lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail(ErrorCode::kConfig, "optim.beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail(ErrorCode::kConfig, "optim.beta2 must be in [0, 1)");
  if (!(eps > 0.0)) fail(ErrorCode::kConfig, "optim.eps must be > 0");
  if (batch_size < 1) fail(ErrorCode::kConfig, "optim.batch must be >= 1");
}

Adam::Adam(const FusionModel& model, const OptimizerConfig& config)
    : config_(config) {
  for (const Tensor& t : model.parameters()) {
    m_.emplace_back(t.value.rows(), t.value.cols());
    v_.emplace_back(t.value.rows(), t.value.cols());
  }
}

void Adam::step(FusionModel& model, const std::vector<Matrix>& grads) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step = config_.lr / c1;
  const double inv_sqrt_c2 = 1.0 / std::sqrt(c2);
  auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].value.data();
    auto& m = m_[i].data();
    auto& v = v_[i].data();
    const auto& g = grads[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      w[j] -= step * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + config_.eps);
    }
  }
  model.mark_updated();
}

TrainingTrace train(FusionModel& model, std::span<const Record> records,
                    std::span<const std::size_t> train_indices,
                    std::span<const std::size_t> val_indices,
                    const LossSpec& loss, const OptimizerConfig& config) {
  config.validate();
  if (train_indices.empty()) fail(ErrorCode::kInput, "training set is empty");

  std::vector<Example> examples;
  for (std::size_t idx : train_indices) examples.push_back({idx, false});
  if (config.symmetric) {
    for (std::size_t idx : train_indices) examples.push_back({idx, true});
  }
  const std::size_t n = examples.size();

  std::vector<std::size_t> val_labels;
  for (std::size_t idx : val_indices) val_labels.push_back(records[idx].label);

  Adam adam(model, config);
  std::mt19937_64 rng(config.shuffle_seed);
  std::vector<std::size_t> order(n);
  std::vector<double> sample_loss(n);
  std::vector<char> sample_hit(n);

  TrainingTrace trace;
  double best_f1 = -1.0;
  std::vector<Tensor> best_params;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(n, start + config.batch_size);
      std::vector<std::size_t> rows;
      std::vector<std::size_t> labels;
      std::unique_ptr<bool[]> swapped(new bool[end - start]);
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = examples[order[i]];
        rows.push_back(ex.record);
        labels.push_back(records[ex.record].label);
        swapped[i - start] = ex.swapped;
      }
      const PairBatch batch = make_batch(
          records, rows, std::span<const bool>(swapped.get(), end - start));
      const ForwardResult fwd = forward(model, batch);
      const std::string where =
          " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no);
      BatchLoss bl;
      try {
        bl = batch_loss(loss, fwd.logits, labels);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) throw;
        fail(ErrorCode::kNumeric, e.what() + where);
      }
      if (!std::isfinite(bl.mean)) fail(ErrorCode::kNumeric, "non-finite loss" + where);
      const std::vector<std::size_t> pred = argmax_rows(fwd.logits);
      for (std::size_t i = start; i < end; ++i) {
        sample_loss[order[i]] = bl.values[i - start];
        sample_hit[order[i]] = pred[i - start] == labels[i - start];
      }
      const Gradients grads = backward(model, fwd.cache, bl.grad);
      adam.step(model, grads.params);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += sample_loss[i];
      hits += sample_hit[i] ? 1 : 0;
    }
    rec.train_loss = sum / static_cast<double>(n);
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(n);
    rec.val_macro_f1 = std::numeric_limits<double>::quiet_NaN();

    if (!val_indices.empty()) {
      const Matrix proba = predict_proba(model, records, val_indices);
      rec.val_macro_f1 = evaluate(proba, val_labels).macro_f1;
      if (rec.val_macro_f1 > best_f1) {
        best_f1 = rec.val_macro_f1;
        best_params = model.parameters();
        trace.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    } else {
      trace.best_epoch = epoch;
    }
    trace.epochs.push_back(rec);
    if (!val_indices.empty() && since_best >= config.patience) {
      trace.stopped_early = epoch < config.epochs;
      break;
    }
  }

  if (!best_params.empty() && trace.best_epoch != trace.epochs.size()) {
    model.parameters() = std::move(best_params);
    model.mark_updated();
  }
  return trace;
}

Matrix predict_proba(const FusionModel& model, std::span<const Record> records,
                     std::span<const std::size_t> indices) {
  const std::size_t classes = model.config().n_classes;
  Matrix out(indices.size(), classes);
  for (std::size_t start = 0; start < indices.size(); start += kPredictChunk) {
    const std::size_t end = std::min(indices.size(), start + kPredictChunk);
    const PairBatch batch = make_batch(records, indices.subspan(start, end - start));
    const ForwardResult fwd = forward(model, batch);
    for (std::size_t r = 0; r < end - start; ++r) {
      const std::vector<double> p = softmax(fwd.logits.row(r));
      std::copy(p.begin(), p.end(), out.row(start + r).begin());
    }
  }
  return out;
}

Split make_split(std::span<const std::size_t> labels, std::size_t n_classes,
                 double train_fraction, double test_fraction, bool stratified,
                 std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0) ||
      !(test_fraction > 0.0 && test_fraction < 1.0) ||
      train_fraction + test_fraction > 1.0 + 1e-12) {
    fail(ErrorCode::kConfig,
         "split fractions must lie in (0, 1) and sum to at most 1");
  }
  const double val_fraction = std::max(0.0, 1.0 - train_fraction - test_fraction);
  std::mt19937_64 rng(seed);
  Split split;

  auto assign = [&](std::vector<std::size_t>& members, bool keep_one_each) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<std::ptrdiff_t>(members.size());
    auto n_test = static_cast<std::ptrdiff_t>(std::llround(test_fraction * static_cast<double>(n)));
    auto n_val = static_cast<std::ptrdiff_t>(std::llround(val_fraction * static_cast<double>(n)));
    if (keep_one_each) {
      if (n < 2) {
        n_test = 0;
        n_val = 0;
      } else {
        n_test = std::clamp<std::ptrdiff_t>(n_test, 1, n - 1);
        n_val = std::clamp<std::ptrdiff_t>(n_val, 0, n - 1 - n_test);
      }
    } else {
      n_val = std::min(n_val, n - n_test);
    }
    split.test.insert(split.test.end(), members.begin(), members.begin() + n_test);
    split.val.insert(split.val.end(), members.begin() + n_test,
                     members.begin() + n_test + n_val);
    split.train.insert(split.train.end(), members.begin() + n_test + n_val, members.end());
  };

  if (stratified) {
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= n_classes) {
        fail(ErrorCode::kIndex, "label " + std::to_string(labels[i]) + " out of range");
      }
      by_class[labels[i]].push_back(i);
    }
    for (auto& members : by_class) assign(members, true);
  } else {
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    assign(all, false);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace tfmd
