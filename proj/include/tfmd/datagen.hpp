// SPDX-License-Identifier: Apache-2.0
//
// Synthetic long-tailed drug-pair datasets.
//
// Each record is a labeled (drug_a, drug_b) pair carrying four modality
// embedding blocks per drug, in the fixed order graph, sequence, target,
// enzyme. Features are class prototype + drug identity offset + Gaussian
// noise, with per-modality signal and noise scales so that modality
// informativeness can be dialed in.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfmd/imbalance.hpp"

namespace tfmd {

enum class Modality : std::size_t { kGraph = 0, kSequence = 1, kTarget = 2, kEnzyme = 3 };
inline constexpr std::size_t kNumModalities = 4;
inline constexpr char kModalityLetters[kNumModalities] = {'g', 's', 't', 'e'};

using ModalityDims = std::array<std::size_t, kNumModalities>;
using ModalityScales = std::array<double, kNumModalities>;
using DrugFeatures = std::array<std::vector<float>, kNumModalities>;

struct DatasetSpec {
  std::size_t n_classes = 0;
  std::size_t n_samples = 0;
  double cir = 1.0;
  std::size_t n_drugs = 100;
  ModalityDims embed_dims{64, 64, 64, 64};
  std::uint64_t seed = 0;
  // Prototype scale per modality; 0 makes a modality carry no class signal.
  ModalityScales signal{1.0, 1.0, 1.0, 1.0};
  ModalityScales noise{1.0, 1.0, 1.0, 1.0};
  double drug_scale = 0.5;

  // Throws ErrorCode::kSpec.
  void validate() const;
};

struct Preset {
  std::string_view name;
  std::size_t n_samples;
  std::size_t n_classes;
  std::size_t n_drugs;
  double cir;
  std::string_view features;
};

// DDIMDL, MUFFIN, DDI-DB110, DDI-DB171.
std::span<const Preset> presets();
// Throws ErrorCode::kSpec for an unknown name.
DatasetSpec preset_spec(std::string_view name);

// Long-tailed per-class counts summing to n_samples. The head count is
// round(cir * t) for an integer tail count t >= 1, and the classes in between
// follow a geometric decay; when the sample budget does not fit a pure
// geometric profile with those endpoints, the decay exponent is warped
// (n_i = h (t/h)^((i/(N-1))^a)) and solved for the budget.
std::vector<std::int64_t> sample_class_counts(const DatasetSpec& spec);

struct Record {
  std::string pair_id;
  std::uint32_t drug_a = 0;
  std::uint32_t drug_b = 0;
  std::size_t label = 0;
  DrugFeatures features_a;
  DrugFeatures features_b;

  bool operator==(const Record&) const = default;
};

struct Dataset {
  std::size_t n_classes = 0;
  ModalityDims dims{};
  std::vector<Record> records;

  std::vector<std::size_t> labels() const;
  // Throws ErrorCode::kConstruction if a class has no records.
  ClassStats stats() const;
};

Dataset generate_dataset(const DatasetSpec& spec);

// Target/enzyme presence profile of one drug.
struct BitProfile {
  std::uint32_t drug_id = 0;
  std::vector<std::uint8_t> bits;  // entries in {0, 1}
};

enum class JaccardMode {
  kPrinted,   // |A and B| / (|A or B| - |A and B|)
  kStandard,  // |A and B| / |A or B|
};

struct JaccardOptions {
  JaccardMode mode = JaccardMode::kPrinted;
  // Printed-mode value for identical non-empty sets (zero denominator).
  double identical_cap = 1e6;
};

// Similarity of `profile` against each of `others`. Two empty sets score 0.
// Throws ErrorCode::kInput on width mismatch.
std::vector<double> jaccard_similarity_profile(
    const BitProfile& profile, std::span<const BitProfile> others,
    const JaccardOptions& options = {});

// Line-oriented text format:
//   #tfmd-dataset v1 classes=<N> dims=<g>,<s>,<t>,<e>
//   pair_id \t drug_a \t drug_b \t label \t a.g \t a.s \t a.t \t a.e \t b.g ...
// where each block is space-separated decimals with 9 significant digits.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
// Throws ErrorCode::kIo, kParse (with line number) or kSchema.
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace tfmd
