// SPDX-License-Identifier: Apache-2.0
#include "tfmd/tail_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include "tfmd/error.hpp"

namespace tfmd {
namespace {

constexpr int kMaxIterations = 64;

double initial_guess(double x) {
  constexpr double e = std::numbers::e;
  if (x < -0.25) {
    // Series about the branch point -1/e.
    const double p = std::sqrt(std::max(0.0, 2.0 * (e * x + 1.0)));
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  }
  if (x < 3.0) return std::log1p(x);
  const double l1 = std::log(x);
  const double l2 = std::log(l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w0(double x) {
  const double branch = -std::exp(-1.0);
  if (std::isnan(x) || x < branch) {
    fail(ErrorCode::kParameter,
         "lambert_w0 requires x >= -1/e, got " + std::to_string(x));
  }
  if (x == 0.0) return 0.0;
  if (x == branch) return -1.0;
  if (std::isinf(x)) return x;

  const double tol = 1e-15 * std::max(1.0, std::abs(x));
  double w = initial_guess(x);
  for (int it = 0; it < kMaxIterations; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= tol) break;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    // Halley step.
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double next = w - f / denom;
    if (next == w || !std::isfinite(next)) break;
    w = std::max(next, -1.0);
  }
  return w;
}

VanishingReport fl_vanishing_threshold(double gamma) {
  if (!(gamma > 0.0)) fail(ErrorCode::kParameter, "gamma must be > 0");
  VanishingReport r;
  r.loss_kind = LossKind::kFL;
  r.gamma = gamma;
  r.crossover_p = std::exp(-1.0 / gamma);
  r.in_unit_interval = r.crossover_p <= 1.0;
  return r;
}

VanishingReport tfl_vanishing_threshold(double gamma, double beta) {
  if (!(gamma > 0.0)) fail(ErrorCode::kParameter, "gamma must be > 0");
  if (!(beta > 0.0)) fail(ErrorCode::kParameter, "beta must be > 0");
  VanishingReport r;
  r.loss_kind = LossKind::kTFL;
  r.gamma = gamma;
  r.beta = beta;
  const double ratio = beta / gamma;
  r.crossover_p = ratio / lambert_w0(ratio * std::exp(1.0 / gamma));
  r.in_unit_interval = r.crossover_p <= 1.0;
  return r;
}

std::vector<double> uniform_grid(std::size_t count, double lo, double hi) {
  if (count == 0) return {};
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = lo + step * static_cast<double>(i);
  }
  grid.back() = hi;
  return grid;
}

std::vector<CurvePoint> curve_export(const CurveSpec& spec,
                                     std::span<const double> grid) {
  if (spec.kind == LossKind::kBS || spec.kind == LossKind::kLDAM) {
    fail(ErrorCode::kParameter,
         std::string(to_string(spec.kind)) +
             " is defined on logits and has no P_y curve");
  }
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  for (double p : grid) {
    if (!(p > 0.0 && p < 1.0)) {
      fail(ErrorCode::kParameter,
           "curve grid point " + std::to_string(p) + " outside (0, 1)");
    }
    const double log_p = std::log(p);
    CurvePoint pt{p, 0.0, 0.0};
    switch (spec.kind) {
      case LossKind::kCE:
        pt.loss = -log_p;
        pt.grad = -1.0 / p;
        break;
      case LossKind::kWCE:
      case LossKind::kCB:
        pt.loss = -spec.weight * log_p;
        pt.grad = -spec.weight / p;
        break;
      case LossKind::kFL:
      case LossKind::kTFL: {
        // Factored form (1-p)^(g-1) [g ln p - 1/p + 1].
        const double q = 1.0 - p;
        pt.loss = -std::pow(q, spec.gamma) * log_p;
        pt.grad = std::pow(q, spec.gamma - 1.0) *
                  (spec.gamma * log_p - 1.0 / p + 1.0);
        if (spec.kind == LossKind::kTFL && spec.tail) {
          pt.loss -= spec.beta * log_p;
          pt.grad -= spec.beta / p;
        }
        break;
      }
      default:
        break;
    }
    out.push_back(pt);
  }
  return out;
}

void write_curve_csv(std::ostream& os, std::span<const CurvePoint> curve) {
  os << "p,loss,grad\n";
  char buf[128];
  for (const CurvePoint& pt : curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", pt.p, pt.loss,
                  pt.grad);
    os << buf;
  }
}

}  // namespace tfmd
