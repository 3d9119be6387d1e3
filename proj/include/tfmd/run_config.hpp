// SPDX-License-Identifier: Apache-2.0
//
// Run configuration as flat "section.key = value" text.
//
//   seed = 7
//   out = runs/tfl
//   dataset.preset = DDIMDL          # or dataset.path, or generator keys
//   dataset.classes = 50
//   loss.kind = TFL
//   optim.epochs = 50
//
// Blank lines and text after '#' are ignored. A preset is applied before any
// other dataset key, so explicit keys refine it. Unknown keys are errors.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfmd/datagen.hpp"
#include "tfmd/fusion_model.hpp"
#include "tfmd/losses.hpp"
#include "tfmd/training.hpp"

namespace tfmd {

struct SplitConfig {
  double train = 0.8;
  double test = 0.2;
  bool stratified = true;
};

enum class SweepParam { kBeta, kTs, kGamma };

std::string_view to_string(SweepParam p);

struct SweepConfig {
  SweepParam param = SweepParam::kBeta;
  std::vector<double> grid{0.0, 1.0, 2.0, 3.0};
  std::size_t repeats = 1;

  // Throws ErrorCode::kConfig.
  void validate() const;
};

struct RunConfig {
  // Dataset source, in priority order: file path, else generator (seeded
  // from preset when one is named).
  std::string dataset_path;
  std::string preset;
  DatasetSpec generator;
  std::optional<std::uint64_t> dataset_seed;  // defaults to `seed`

  ModelConfig model;  // embed_dims and n_classes come from the dataset
  LossKind loss_kind = LossKind::kTFL;
  LossParams loss;
  OptimizerConfig optim;
  SplitConfig split;
  // Tail cut used for the tail-subset report, independent of the loss.
  double report_tail_threshold = 0.9;

  std::vector<LossKind> compare_losses{std::begin(kAllLossKinds),
                                       std::end(kAllLossKinds)};
  std::vector<std::string> variants{"G", "S", "T", "E", "GS", "TE", "GSTE"};
  SweepConfig sweep;

  std::uint64_t seed = 0;
  std::filesystem::path out = "tfmd_out";

  // Throws ErrorCode::kConfig.
  void validate() const;
};

// Ordered key -> value map; a later assignment of the same key wins.
using Settings = std::map<std::string, std::string>;

// Throws ErrorCode::kParse with a line number on a line lacking '='.
Settings parse_settings(std::string_view text);
// Throws ErrorCode::kIo.
Settings read_settings(const std::filesystem::path& path);

// Throws ErrorCode::kConfig on unknown keys or malformed values.
RunConfig build_run_config(const Settings& settings);

// Every key with its resolved value; parsing the result rebuilds an equal
// configuration.
std::string format_run_config(const RunConfig& config);

}  // namespace tfmd
