// SPDX-License-Identifier: Apache-2.0
//
// Experiment drivers behind the command-line subcommands. Each writes its
// artifacts under RunConfig::out and a short human-readable log to `log`.
// Given the same configuration every artifact is byte-identical, except the
// "# generated_at=" first line of metrics.txt.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tfmd/datagen.hpp"
#include "tfmd/metrics.hpp"
#include "tfmd/run_config.hpp"
#include "tfmd/tail_analysis.hpp"
#include "tfmd/training.hpp"

namespace tfmd {

// Reads dataset_path when set, else generates from the generator spec.
Dataset resolve_dataset(const RunConfig& config);

struct RunResult {
  MetricsReport report;  // held-out test split
  SubsetMacro tail;      // tail classes at report_tail_threshold
  TrainingTrace trace;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
};

// Split, init, train and evaluate one model. Writes nothing. When
// `model_out` is non-null it receives the trained model.
RunResult run_experiment(const RunConfig& config, const Dataset& data,
                         std::optional<FusionModel>* model_out = nullptr);

// Writes dataset.tsv and class_counts.csv.
Dataset cmd_gen(const RunConfig& config, std::ostream& log);

// Writes metrics.txt, per_class.csv, trace.csv, model.ckpt and
// effective_config.txt.
RunResult cmd_train(const RunConfig& config, std::ostream& log);

struct TableRow {
  std::string label;
  MetricsReport report;
  SubsetMacro tail;
};

// One row per loss in config.compare_losses, sharing data, split and seed.
// Writes compare_losses.csv.
std::vector<TableRow> cmd_compare_losses(const RunConfig& config, std::ostream& log);

// One row per modality variant in config.variants. Writes ablation.csv.
std::vector<TableRow> cmd_ablate(const RunConfig& config, std::ostream& log);

struct SweepPoint {
  double value = 0.0;
  std::vector<MetricsReport> runs;  // one per repeat
};

// Seeds seed, seed+1, ... per repeat. Writes sweep.csv with mean and sample
// standard deviation of the six headline metrics per grid point.
std::vector<SweepPoint> cmd_sweep(const RunConfig& config, std::ostream& log);

// Vanishing-point report for loss.kind (FL or TFL) plus CE, FL and tail-TFL
// curve tables. Writes vanishing.txt and curve_{ce,fl,tfl}.csv.
VanishingReport cmd_analyze(const RunConfig& config, std::ostream& log);

}  // namespace tfmd
