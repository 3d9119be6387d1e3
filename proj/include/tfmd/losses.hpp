// SPDX-License-Identifier: Apache-2.0
//
// Long-tailed classification losses with analytic gradients.
//
// Probability-form losses (CE, WCE, FL, CB, TFL) are written in terms of the
// true-class probability P_y and chained through the softmax Jacobian.
// Logit-form losses (BS, LDAM) are evaluated directly on shifted logits with
// log-sum-exp. All logarithms are natural.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfmd/imbalance.hpp"
#include "tfmd/matrix.hpp"

namespace tfmd {

enum class LossKind { kCE, kWCE, kFL, kCB, kBS, kLDAM, kTFL };

inline constexpr LossKind kAllLossKinds[] = {
    LossKind::kCE, LossKind::kWCE,  LossKind::kFL, LossKind::kCB,
    LossKind::kBS, LossKind::kLDAM, LossKind::kTFL};

std::string_view to_string(LossKind kind);
// Case-insensitive; throws ErrorCode::kParameter for unknown names.
LossKind parse_loss_kind(std::string_view name);

// P_y is clamped to [kProbFloor, 1 - kProbFloor] before log and division.
inline constexpr double kProbFloor = 1e-12;

struct LossParams {
  double gamma = 2.0;
  double beta = 2.0;
  double lambda = 0.999;
  double margin_c = 0.5;
  double tail_threshold = 0.9;
};

// One value fully determines a loss and its gradient. Immutable once built.
class LossSpec {
 public:
  // Validates the hyperparameters the kind needs. `stats` is required for
  // WCE, CB, BS, LDAM and TFL (TFL derives its tail mask from it).
  LossSpec(LossKind kind, const LossParams& params,
           std::optional<ClassStats> stats = std::nullopt);

  LossKind kind() const { return kind_; }
  const LossParams& params() const { return params_; }
  const std::optional<ClassStats>& stats() const { return stats_; }
  const std::optional<TailPartition>& tail() const { return tail_; }

 private:
  LossKind kind_;
  LossParams params_;
  std::optional<ClassStats> stats_;
  std::optional<TailPartition> tail_;
};

struct LossEval {
  double value = 0.0;
  // d value / d P_y. For BS and LDAM this is taken with respect to the
  // true-class probability of the adjusted (shifted-logit) softmax.
  double grad_p = 0.0;
  std::vector<double> grad_z;
};

std::vector<double> softmax(std::span<const double> z);

LossEval ce_loss(std::span<const double> p, std::size_t y);
LossEval wce_loss(std::span<const double> p, std::size_t y,
                  const ClassStats& stats);
LossEval focal_loss(std::span<const double> p, std::size_t y, double gamma);
LossEval cb_loss(std::span<const double> p, std::size_t y, double lambda,
                 const ClassStats& stats);
LossEval bs_loss(std::span<const double> z, std::size_t y,
                 const ClassStats& stats);
LossEval ldam_loss(std::span<const double> z, std::size_t y, double margin_c,
                   const ClassStats& stats);
LossEval tfl_loss(std::span<const double> p, std::size_t y, double gamma,
                  double beta, const TailPartition& tail);

// LDAM margins C / n_i^(1/4).
std::vector<double> ldam_margins(const ClassStats& stats, double margin_c);

// Class weight (1 - lambda) / (1 - lambda^n).
double cb_weight(double lambda, std::int64_t n);

LossEval loss_on_logits(const LossSpec& spec, std::span<const double> z,
                        std::size_t y);

struct BatchLoss {
  double mean = 0.0;
  Matrix grad;                 // rows scaled by 1 / batch
  std::vector<double> values;  // per-sample loss
};

// Mean over rows of `logits`, reduced in index order.
BatchLoss batch_loss(const LossSpec& spec, const Matrix& logits,
                     std::span<const std::size_t> labels);

}  // namespace tfmd
