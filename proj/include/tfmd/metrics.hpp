// SPDX-License-Identifier: Apache-2.0
//
// One-vs-rest multi-class evaluation with macro averaging.
//
// Conventions:
//   - precision or recall with a zero denominator is 0; F1 is 0 when both are.
//   - macro P/R/F1 average over classes present in the ground truth.
//   - AUC is the Mann-Whitney statistic with midranks; classes without both
//     positives and negatives are excluded from the macro AUC.
//   - AUPR is non-interpolated average precision, sum (R_k - R_{k-1}) P_k over
//     distinct score thresholds; classes without positives are excluded.
//   - accuracy is plain top-1 sample accuracy.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "tfmd/matrix.hpp"

namespace tfmd {

struct ClassMetrics {
  std::size_t support = 0;
  std::size_t predicted = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;   // NaN when undefined for this class
  double aupr = 0.0;  // NaN when undefined for this class
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double macro_auc = 0.0;
  double macro_aupr = 0.0;
  std::vector<ClassMetrics> per_class;
};

struct ConfusionSummary {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;  // auc / aupr left at 0
};

// Throws ErrorCode::kInput on length mismatch, empty input or a label
// outside [0, n_classes).
ConfusionSummary confusion_metrics(std::span<const std::size_t> predicted,
                                   std::span<const std::size_t> truth,
                                   std::size_t n_classes);

struct RankingSummary {
  std::vector<double> per_class;  // NaN where undefined
  double macro = 0.0;             // mean over defined classes; NaN if none
};

// `scores` has one probability row per sample. Throws ErrorCode::kInput when
// a row is not a distribution (tolerance 1e-6) or shapes disagree.
RankingSummary roc_auc_ovr(const Matrix& scores,
                           std::span<const std::size_t> truth);
RankingSummary pr_auc_ovr(const Matrix& scores,
                          std::span<const std::size_t> truth);

// Argmax prediction (lowest index on ties) plus every metric.
MetricsReport evaluate(const Matrix& scores,
                       std::span<const std::size_t> truth);

std::vector<std::size_t> argmax_rows(const Matrix& scores);

// Macro values restricted to classes in `mask` (same conventions).
struct SubsetMacro {
  std::size_t classes = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double aupr = 0.0;
};
SubsetMacro macro_over(const MetricsReport& report,
                       const std::vector<bool>& mask);

// Flat key=value record, one metric per line.
void write_summary(std::ostream& os, const MetricsReport& report);
// Columns: class,support,precision,recall,f1,auc,aupr
void write_per_class_csv(std::ostream& os, const MetricsReport& report);

}  // namespace tfmd
