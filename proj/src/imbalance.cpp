// SPDX-License-Identifier: Apache-2.0
#include "tfmd/imbalance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tfmd/error.hpp"

namespace tfmd {

ClassStats::ClassStats(std::vector<std::int64_t> counts)
    : counts_(std::move(counts)) {
  if (counts_.empty()) {
    fail(ErrorCode::kConstruction, "class counts must be non-empty");
  }
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    if (counts_[c] < 1) {
      fail(ErrorCode::kConstruction,
           "class " + std::to_string(c) + " has count " +
               std::to_string(counts_[c]) + "; every class needs >= 1 sample");
    }
  }
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});

  desc_order_.resize(counts_.size());
  std::iota(desc_order_.begin(), desc_order_.end(), std::size_t{0});
  std::stable_sort(desc_order_.begin(), desc_order_.end(),
                   [this](std::size_t a, std::size_t b) {
                     return counts_[a] > counts_[b];
                   });

  // Integer cumulative sums keep the last position exactly 1.
  position_.assign(counts_.size(), 0.0);
  std::int64_t cumulative = 0;
  for (std::size_t c : desc_order_) {
    cumulative += counts_[c];
    position_[c] = static_cast<double>(cumulative) / static_cast<double>(total_);
  }

  const auto [lo, hi] = std::minmax_element(counts_.begin(), counts_.end());
  cir_ = static_cast<double>(*hi) / static_cast<double>(*lo);
}

ClassStats class_stats_from_counts(std::span<const std::int64_t> counts) {
  return ClassStats(std::vector<std::int64_t>(counts.begin(), counts.end()));
}

ClassStats class_stats_from_labels(std::span<const std::size_t> labels,
                                   std::size_t num_classes) {
  std::vector<std::int64_t> counts(num_classes, 0);
  for (std::size_t y : labels) {
    if (y >= num_classes) {
      fail(ErrorCode::kIndex, "label " + std::to_string(y) + " out of range");
    }
    ++counts[y];
  }
  return ClassStats(std::move(counts));
}

std::size_t TailPartition::num_tail() const {
  return static_cast<std::size_t>(
      std::count(is_tail.begin(), is_tail.end(), true));
}

TailPartition tail_partition(const ClassStats& stats, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorCode::kParameter,
         "tail threshold must lie in [0, 1], got " + std::to_string(threshold));
  }
  TailPartition out;
  out.threshold = threshold;
  out.is_tail.resize(stats.num_classes());
  const auto& pos = stats.normalized_position();
  for (std::size_t c = 0; c < pos.size(); ++c) {
    out.is_tail[c] = pos[c] > threshold;
  }
  return out;
}

}  // namespace tfmd
