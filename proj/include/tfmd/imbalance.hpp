// SPDX-License-Identifier: Apache-2.0
//
// Class-frequency statistics for long-tailed label distributions.
//
// Classes are ranked by sample count (descending, ties by ascending class
// index). The normalized position of a class is the cumulative sample count
// from the head of the ranking through that class, divided by the total. A
// class is "tail" when its normalized position is strictly greater than a
// threshold T_s in [0, 1].
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tfmd {

class ClassStats {
 public:
  // Throws ErrorCode::kConstruction on an empty vector or any count < 1.
  explicit ClassStats(std::vector<std::int64_t> counts);

  std::size_t num_classes() const { return counts_.size(); }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t count(std::size_t c) const { return counts_.at(c); }
  std::int64_t total() const { return total_; }
  // Class indices ordered head to tail.
  const std::vector<std::size_t>& desc_order() const { return desc_order_; }
  // Indexed by class id (not by rank).
  const std::vector<double>& normalized_position() const { return position_; }
  double cir() const { return cir_; }

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
  std::vector<std::size_t> desc_order_;
  std::vector<double> position_;
  double cir_ = 1.0;
};

ClassStats class_stats_from_counts(std::span<const std::int64_t> counts);

// Tallies labels in [0, num_classes) and builds stats; every class must occur.
ClassStats class_stats_from_labels(std::span<const std::size_t> labels,
                                   std::size_t num_classes);

struct TailPartition {
  double threshold = 0.9;
  std::vector<bool> is_tail;

  bool tail(std::size_t c) const { return is_tail.at(c); }
  std::size_t num_tail() const;
};

// Throws ErrorCode::kParameter unless 0 <= threshold <= 1.
TailPartition tail_partition(const ClassStats& stats, double threshold);

}  // namespace tfmd
