// SPDX-License-Identifier: Apache-2.0
#include "tfmd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "tfmd/error.hpp"

namespace tfmd {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double mean_defined(std::span<const double> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? kNaN : sum / static_cast<double>(n);
}

void check_scores(const Matrix& scores, std::span<const std::size_t> truth) {
  if (scores.rows() != truth.size()) {
    fail(ErrorCode::kInput, "score rows and labels differ in length");
  }
  if (truth.empty()) fail(ErrorCode::kInput, "no samples to evaluate");
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    double sum = 0.0;
    for (double v : scores.row(r)) {
      if (!std::isfinite(v) || v < 0.0) {
        fail(ErrorCode::kInput,
             "score row " + std::to_string(r) + " has an invalid entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      fail(ErrorCode::kInput,
           "score row " + std::to_string(r) + " does not sum to 1");
    }
    if (truth[r] >= scores.cols()) {
      fail(ErrorCode::kInput, "label out of range at row " + std::to_string(r));
    }
  }
}

// Sample indices sorted by descending score in column c (stable).
std::vector<std::size_t> order_by_score(const Matrix& scores, std::size_t c) {
  std::vector<std::size_t> idx(scores.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores(a, c) > scores(b, c);
  });
  return idx;
}

}  // namespace

ConfusionSummary confusion_metrics(std::span<const std::size_t> predicted,
                                   std::span<const std::size_t> truth,
                                   std::size_t n_classes) {
  if (predicted.size() != truth.size()) {
    fail(ErrorCode::kInput, "prediction and label vectors differ in length");
  }
  if (truth.empty()) fail(ErrorCode::kInput, "no samples to evaluate");

  std::vector<std::size_t> tp(n_classes, 0);
  ConfusionSummary out;
  out.per_class.resize(n_classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n_classes || predicted[i] >= n_classes) {
      fail(ErrorCode::kInput, "label out of range at sample " + std::to_string(i));
    }
    ++out.per_class[truth[i]].support;
    ++out.per_class[predicted[i]].predicted;
    if (truth[i] == predicted[i]) {
      ++tp[truth[i]];
      ++correct;
    }
  }
  out.accuracy =
      static_cast<double>(correct) / static_cast<double>(truth.size());

  double sp = 0.0, sr = 0.0, sf = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    ClassMetrics& m = out.per_class[c];
    const double t = static_cast<double>(tp[c]);
    m.precision = safe_div(t, static_cast<double>(m.predicted));
    m.recall = safe_div(t, static_cast<double>(m.support));
    m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
    if (m.support == 0) continue;
    sp += m.precision;
    sr += m.recall;
    sf += m.f1;
    ++present;
  }
  const double k = static_cast<double>(present);
  out.macro_precision = sp / k;
  out.macro_recall = sr / k;
  out.macro_f1 = sf / k;
  return out;
}

RankingSummary roc_auc_ovr(const Matrix& scores,
                           std::span<const std::size_t> truth) {
  check_scores(scores, truth);
  const std::size_t n = scores.rows();
  RankingSummary out;
  out.per_class.assign(scores.cols(), kNaN);
  std::vector<double> rank(n);
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    std::size_t pos = 0;
    for (std::size_t y : truth) pos += (y == c);
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) continue;

    // Ascending midranks (1-based).
    std::vector<std::size_t> idx = order_by_score(scores, c);
    std::reverse(idx.begin(), idx.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && scores(idx[j + 1], c) == scores(idx[i], c)) ++j;
      const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
      i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] == c) rank_sum += rank[i];
    }
    const double p = static_cast<double>(pos);
    out.per_class[c] =
        (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
  }
  out.macro = mean_defined(out.per_class);
  return out;
}

RankingSummary pr_auc_ovr(const Matrix& scores,
                          std::span<const std::size_t> truth) {
  check_scores(scores, truth);
  const std::size_t n = scores.rows();
  RankingSummary out;
  out.per_class.assign(scores.cols(), kNaN);
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    std::size_t pos = 0;
    for (std::size_t y : truth) pos += (y == c);
    if (pos == 0) continue;

    const std::vector<std::size_t> idx = order_by_score(scores, c);
    std::size_t tp = 0, fp = 0;
    double ap = 0.0, prev_recall = 0.0;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && scores(idx[j], c) == scores(idx[i], c)) {
        (truth[idx[j]] == c ? tp : fp) += 1;
        ++j;
      }
      const double recall =
          static_cast<double>(tp) / static_cast<double>(pos);
      const double precision =
          static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += (recall - prev_recall) * precision;
      prev_recall = recall;
      i = j;
    }
    out.per_class[c] = ap;
  }
  out.macro = mean_defined(out.per_class);
  return out;
}

std::vector<std::size_t> argmax_rows(const Matrix& scores) {
  std::vector<std::size_t> out(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    out[r] = static_cast<std::size_t>(
        std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

MetricsReport evaluate(const Matrix& scores,
                       std::span<const std::size_t> truth) {
  check_scores(scores, truth);
  const ConfusionSummary conf =
      confusion_metrics(argmax_rows(scores), truth, scores.cols());
  const RankingSummary auc = roc_auc_ovr(scores, truth);
  const RankingSummary aupr = pr_auc_ovr(scores, truth);

  MetricsReport r;
  r.accuracy = conf.accuracy;
  r.macro_precision = conf.macro_precision;
  r.macro_recall = conf.macro_recall;
  r.macro_f1 = conf.macro_f1;
  r.macro_auc = auc.macro;
  r.macro_aupr = aupr.macro;
  r.per_class = conf.per_class;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    r.per_class[c].auc = auc.per_class[c];
    r.per_class[c].aupr = aupr.per_class[c];
  }
  return r;
}

SubsetMacro macro_over(const MetricsReport& report,
                       const std::vector<bool>& mask) {
  if (mask.size() != report.per_class.size()) {
    fail(ErrorCode::kInput, "class mask size does not match the report");
  }
  SubsetMacro out;
  std::vector<double> auc, aupr;
  for (std::size_t c = 0; c < mask.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    if (!mask[c] || m.support == 0) continue;
    ++out.classes;
    out.precision += m.precision;
    out.recall += m.recall;
    out.f1 += m.f1;
    auc.push_back(m.auc);
    aupr.push_back(m.aupr);
  }
  if (out.classes == 0) {
    out.precision = out.recall = out.f1 = out.auc = out.aupr = kNaN;
    return out;
  }
  const double k = static_cast<double>(out.classes);
  out.precision /= k;
  out.recall /= k;
  out.f1 /= k;
  out.auc = mean_defined(auc);
  out.aupr = mean_defined(aupr);
  return out;
}

void write_summary(std::ostream& os, const MetricsReport& report) {
  char buf[96];
  auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.12g\n", key, v);
    os << buf;
  };
  line("accuracy", report.accuracy);
  line("macro_precision", report.macro_precision);
  line("macro_recall", report.macro_recall);
  line("macro_f1", report.macro_f1);
  line("macro_auc", report.macro_auc);
  line("macro_aupr", report.macro_aupr);
}

void write_per_class_csv(std::ostream& os, const MetricsReport& report) {
  os << "class,support,precision,recall,f1,auc,aupr\n";
  char buf[192];
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  c, m.support, m.precision, m.recall, m.f1, m.auc, m.aupr);
    os << buf;
  }
}

}  // namespace tfmd
