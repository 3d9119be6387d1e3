// SPDX-License-Identifier: Apache-2.0
#include "tfmd/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "tfmd/error.hpp"

namespace tfmd {
namespace {

void check_finite(std::span<const double> z) {
  for (double v : z) {
    if (!std::isfinite(v)) fail(ErrorCode::kNumeric, "non-finite logit");
  }
}

void check_label(std::size_t y, std::size_t n) {
  if (y >= n) {
    fail(ErrorCode::kIndex, "label " + std::to_string(y) +
                                " out of range for " + std::to_string(n) +
                                " classes");
  }
}

void check_stats(const ClassStats& stats, std::size_t n) {
  if (stats.num_classes() != n) {
    fail(ErrorCode::kShape, "class stats cover " +
                                std::to_string(stats.num_classes()) +
                                " classes, input has " + std::to_string(n));
  }
}

double clamp_prob(double p) {
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Fills grad_z = grad_p * dP_y/dz with dP_y/dz_j = P_y (delta_jy - p_j).
void chain_softmax(LossEval& out, std::span<const double> p, std::size_t y,
                   double py) {
  out.grad_z.resize(p.size());
  const double scale = out.grad_p * py;
  for (std::size_t j = 0; j < p.size(); ++j) {
    out.grad_z[j] = scale * ((j == y ? 1.0 : 0.0) - p[j]);
  }
}

LossEval weighted_ce(std::span<const double> p, std::size_t y, double w) {
  check_label(y, p.size());
  const double py = clamp_prob(p[y]);
  LossEval out;
  out.value = -w * std::log(py);
  out.grad_p = -w / py;
  chain_softmax(out, p, y, py);
  return out;
}

// CE over already shifted logits; grad_p refers to the shifted softmax.
LossEval shifted_logit_ce(std::span<const double> shifted, std::size_t y) {
  const double lse = log_sum_exp(shifted);
  LossEval out;
  out.value = lse - shifted[y];
  out.grad_z.resize(shifted.size());
  for (std::size_t j = 0; j < shifted.size(); ++j) {
    out.grad_z[j] = std::exp(shifted[j] - lse) - (j == y ? 1.0 : 0.0);
  }
  out.grad_p = -1.0 / clamp_prob(std::exp(shifted[y] - lse));
  return out;
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCE: return "CE";
    case LossKind::kWCE: return "WCE";
    case LossKind::kFL: return "FL";
    case LossKind::kCB: return "CB";
    case LossKind::kBS: return "BS";
    case LossKind::kLDAM: return "LDAM";
    case LossKind::kTFL: return "TFL";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  std::string upper(name);
  for (char& ch : upper) ch = static_cast<char>(std::toupper(ch));
  for (LossKind k : kAllLossKinds) {
    if (to_string(k) == upper) return k;
  }
  fail(ErrorCode::kParameter, "unknown loss kind '" + std::string(name) + "'");
}

LossSpec::LossSpec(LossKind kind, const LossParams& params,
                   std::optional<ClassStats> stats)
    : kind_(kind), params_(params), stats_(std::move(stats)) {
  const bool needs_stats = kind == LossKind::kWCE || kind == LossKind::kCB ||
                           kind == LossKind::kBS || kind == LossKind::kLDAM ||
                           kind == LossKind::kTFL;
  if (needs_stats && !stats_) {
    fail(ErrorCode::kParameter,
         std::string(to_string(kind)) + " loss requires class statistics");
  }
  switch (kind) {
    case LossKind::kFL:
      if (!(params.gamma >= 0.0)) fail(ErrorCode::kParameter, "gamma must be >= 0");
      break;
    case LossKind::kTFL:
      if (!(params.gamma >= 0.0)) fail(ErrorCode::kParameter, "gamma must be >= 0");
      if (!(params.beta >= 0.0)) fail(ErrorCode::kParameter, "beta must be >= 0");
      tail_ = tail_partition(*stats_, params.tail_threshold);
      break;
    case LossKind::kCB:
      if (!(params.lambda > 0.0 && params.lambda < 1.0)) {
        fail(ErrorCode::kParameter, "lambda must lie in (0, 1)");
      }
      break;
    case LossKind::kLDAM:
      if (!(params.margin_c > 0.0 && params.margin_c <= 1.0)) {
        fail(ErrorCode::kParameter, "margin C must lie in (0, 1]");
      }
      break;
    default:
      break;
  }
}

std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) fail(ErrorCode::kShape, "softmax of an empty vector");
  check_finite(z);
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

LossEval ce_loss(std::span<const double> p, std::size_t y) {
  return weighted_ce(p, y, 1.0);
}

LossEval wce_loss(std::span<const double> p, std::size_t y,
                  const ClassStats& stats) {
  check_stats(stats, p.size());
  check_label(y, p.size());
  const double w =
      static_cast<double>(stats.total()) / static_cast<double>(stats.count(y));
  return weighted_ce(p, y, w);
}

LossEval focal_loss(std::span<const double> p, std::size_t y, double gamma) {
  if (!(gamma >= 0.0)) fail(ErrorCode::kParameter, "gamma must be >= 0");
  check_label(y, p.size());
  const double py = clamp_prob(p[y]);
  const double q = 1.0 - py;
  const double log_p = std::log(py);
  LossEval out;
  out.value = -std::pow(q, gamma) * log_p;
  out.grad_p = gamma * std::pow(q, gamma - 1.0) * log_p - std::pow(q, gamma) / py;
  chain_softmax(out, p, y, py);
  return out;
}

double cb_weight(double lambda, std::int64_t n) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    fail(ErrorCode::kParameter, "lambda must lie in (0, 1)");
  }
  // 1 - lambda^n without cancellation.
  const double denom = -std::expm1(static_cast<double>(n) * std::log(lambda));
  return (1.0 - lambda) / denom;
}

LossEval cb_loss(std::span<const double> p, std::size_t y, double lambda,
                 const ClassStats& stats) {
  check_stats(stats, p.size());
  check_label(y, p.size());
  return weighted_ce(p, y, cb_weight(lambda, stats.count(y)));
}

LossEval bs_loss(std::span<const double> z, std::size_t y,
                 const ClassStats& stats) {
  check_finite(z);
  check_stats(stats, z.size());
  check_label(y, z.size());
  std::vector<double> shifted(z.begin(), z.end());
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    shifted[i] += std::log(static_cast<double>(stats.count(i)));
  }
  return shifted_logit_ce(shifted, y);
}

std::vector<double> ldam_margins(const ClassStats& stats, double margin_c) {
  std::vector<double> delta(stats.num_classes());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = margin_c / std::pow(static_cast<double>(stats.count(i)), 0.25);
  }
  return delta;
}

LossEval ldam_loss(std::span<const double> z, std::size_t y, double margin_c,
                   const ClassStats& stats) {
  if (!(margin_c > 0.0 && margin_c <= 1.0)) {
    fail(ErrorCode::kParameter, "margin C must lie in (0, 1]");
  }
  check_finite(z);
  check_stats(stats, z.size());
  check_label(y, z.size());
  const std::vector<double> delta = ldam_margins(stats, margin_c);
  std::vector<double> shifted(z.begin(), z.end());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= delta[i];
  return shifted_logit_ce(shifted, y);
}

LossEval tfl_loss(std::span<const double> p, std::size_t y, double gamma,
                  double beta, const TailPartition& tail) {
  if (!(beta >= 0.0)) fail(ErrorCode::kParameter, "beta must be >= 0");
  if (tail.is_tail.size() != p.size()) {
    fail(ErrorCode::kShape, "tail mask does not cover every class");
  }
  LossEval out = focal_loss(p, y, gamma);
  if (!tail.tail(y)) return out;

  const double py = clamp_prob(p[y]);
  out.value += -beta * std::log(py);
  out.grad_p -= beta / py;
  chain_softmax(out, p, y, py);
  return out;
}

LossEval loss_on_logits(const LossSpec& spec, std::span<const double> z,
                        std::size_t y) {
  check_label(y, z.size());
  const LossParams& hp = spec.params();
  switch (spec.kind()) {
    case LossKind::kBS:
      return bs_loss(z, y, *spec.stats());
    case LossKind::kLDAM:
      return ldam_loss(z, y, hp.margin_c, *spec.stats());
    default:
      break;
  }
  const std::vector<double> p = softmax(z);
  switch (spec.kind()) {
    case LossKind::kCE: return ce_loss(p, y);
    case LossKind::kWCE: return wce_loss(p, y, *spec.stats());
    case LossKind::kFL: return focal_loss(p, y, hp.gamma);
    case LossKind::kCB: return cb_loss(p, y, hp.lambda, *spec.stats());
    case LossKind::kTFL: return tfl_loss(p, y, hp.gamma, hp.beta, *spec.tail());
    default: break;
  }
  fail(ErrorCode::kParameter, "unsupported loss kind");
}

BatchLoss batch_loss(const LossSpec& spec, const Matrix& logits,
                     std::span<const std::size_t> labels) {
  if (logits.rows() != labels.size()) {
    fail(ErrorCode::kShape, "batch has " + std::to_string(logits.rows()) +
                                " logit rows but " +
                                std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) fail(ErrorCode::kShape, "empty batch");

  const std::size_t n = labels.size();
  const double batch = static_cast<double>(n);
  BatchLoss out;
  out.grad = Matrix(n, logits.cols());
  out.values.resize(n);
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const LossEval e = loss_on_logits(spec, logits.row(r), labels[r]);
    out.values[r] = e.value;
    sum += e.value;
    auto g = out.grad.row(r);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = e.grad_z[j] / batch;
  }
  out.mean = sum / batch;
  return out;
}

}  // namespace tfmd
