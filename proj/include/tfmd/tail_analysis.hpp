// SPDX-License-Identifier: Apache-2.0
//
// Gradient-vanishing analysis for focal-style losses.
//
// The "vanishing point" of a loss is where the upper bound of its gradient
// magnitude with respect to P_y meets the cross-entropy gradient -1/P_y.
// For FL that is exp(-1/gamma); for TFL on a tail class it is
// beta / (gamma * W0((beta/gamma) * exp(1/gamma))).
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "tfmd/losses.hpp"

namespace tfmd {

// Principal branch of the Lambert W function (w >= -1, w e^w = x).
// Throws ErrorCode::kParameter for x < -1/e.
double lambert_w0(double x);

struct VanishingReport {
  LossKind loss_kind = LossKind::kFL;
  double gamma = 0.0;
  double beta = 0.0;
  double crossover_p = 0.0;
  bool in_unit_interval = false;  // crossover_p <= 1
};

VanishingReport fl_vanishing_threshold(double gamma);
VanishingReport tfl_vanishing_threshold(double gamma, double beta);

struct CurvePoint {
  double p = 0.0;
  double loss = 0.0;
  double grad = 0.0;
};

// Which curve to tabulate. Only probability-form losses have a closed
// P_y-curve; `weight` is the per-class factor of WCE/CB and `tail` selects
// the TFL branch.
struct CurveSpec {
  LossKind kind = LossKind::kCE;
  double gamma = 2.0;
  double beta = 2.0;
  double weight = 1.0;
  bool tail = true;
};

// `count` points uniform on [lo, hi]; the default is 512 on [0.001, 0.999].
std::vector<double> uniform_grid(std::size_t count = 512, double lo = 0.001,
                                 double hi = 0.999);

// Throws ErrorCode::kParameter when a grid point is outside (0, 1) or the
// kind is logit-form (BS, LDAM).
std::vector<CurvePoint> curve_export(const CurveSpec& spec,
                                     std::span<const double> grid);

// Header "p,loss,grad", then one row per point with 17 significant digits.
void write_curve_csv(std::ostream& os, std::span<const CurvePoint> curve);

}  // namespace tfmd
