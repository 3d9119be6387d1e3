// SPDX-License-Identifier: Apache-2.0
//
// Modality-enhancement fusion network for drug-pair classification.
//
// Per drug, each enabled modality runs k stages of affine + activation.
// Graph is enhanced by sequence and target by enzyme: their stage input is
// the concatenation of their own previous representation with the partner's
// previous representation. Sequence and enzyme run plain per-stage maps.
// The raw (stage 0) embeddings are max-pooled and appended to the stage-k
// outputs to form the fused drug vector. The two fused drug vectors are
// concatenated in (drug_a, drug_b) order and fed to a 4-layer classifier.
// Encoder weights are shared between the two drugs.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfmd/datagen.hpp"
#include "tfmd/matrix.hpp"

namespace tfmd {

enum class Activation { kRelu, kTanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

// Subset of {G, S, T, E}. Names follow the ablation variants: "G", "GS",
// "TE", "GSTE", ...
class ModalitySet {
 public:
  ModalitySet() { enabled_.fill(true); }
  // Throws ErrorCode::kUsage on an unknown or empty variant name.
  static ModalitySet parse(std::string_view name);

  bool has(Modality m) const { return enabled_[static_cast<std::size_t>(m)]; }
  bool has(std::size_t m) const { return enabled_[m]; }
  std::string name() const;
  bool operator==(const ModalitySet&) const = default;

 private:
  std::array<bool, kNumModalities> enabled_{};
};

struct ModelConfig {
  ModalityDims embed_dims{64, 64, 64, 64};
  std::size_t hidden_dim = 256;
  std::size_t k_stages = 2;
  std::array<std::size_t, 3> classifier_hidden{256, 256, 128};
  Activation activation = Activation::kRelu;
  std::size_t pool_window = 4;
  std::size_t n_classes = 0;
  ModalitySet modalities;

  // Throws ErrorCode::kConfig.
  void validate() const;
  // Width of one drug's fused vector.
  std::size_t fused_width() const;
};

struct Tensor {
  std::string name;
  Matrix value;
};

class FusionModel {
 public:
  // Fan-in scaled uniform weights, zero biases; deterministic per seed.
  static FusionModel init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  // Index into parameters() by name; throws ErrorCode::kContract if absent.
  std::size_t index_of(std::string_view name) const;
  std::size_t num_scalars() const;

  // Bumped on every parameter update; forward caches remember it.
  std::uint64_t version() const { return version_; }
  void mark_updated() { ++version_; }

  struct Dense {
    std::size_t weight = 0;  // (in, out)
    std::size_t bias = 0;    // (1, out)
    std::size_t in = 0;
    std::size_t out = 0;
  };
  // Encoder layer for (stage, modality); only valid when the modality is on.
  const Dense& encoder(std::size_t stage, std::size_t m) const {
    return encoder_[stage][m];
  }
  const Dense& classifier(std::size_t layer) const { return classifier_[layer]; }

 private:
  explicit FusionModel(const ModelConfig& config);
  std::size_t add_dense(const std::string& prefix, std::size_t in,
                        std::size_t out);

  ModelConfig config_;
  std::vector<Tensor> params_;
  std::vector<Dense> dense_;
  std::vector<std::array<Dense, kNumModalities>> encoder_;
  std::array<Dense, 4> classifier_{};
  std::uint64_t version_ = 0;
};

// One row per drug pair; blocks of disabled modalities may be left empty.
struct PairBatch {
  std::array<Matrix, kNumModalities> a;
  std::array<Matrix, kNumModalities> b;

  std::size_t rows() const;
};

// Rows taken from `records[indices[i]]`; `swapped[i]` (optional) exchanges
// the two drugs of that row.
PairBatch make_batch(std::span<const Record> records,
                     std::span<const std::size_t> indices,
                     std::span<const bool> swapped = {});

struct DenseCache {
  Matrix input;
  Matrix pre;
  Matrix out;
};

struct DrugCache {
  // stages[m][k] for enabled modalities.
  std::array<std::vector<DenseCache>, kNumModalities> stages;
  // Flat argmax position in the raw embedding for each pooled output.
  std::array<std::vector<std::uint32_t>, kNumModalities> pool_argmax;
  std::array<std::size_t, kNumModalities> input_width{};
};

struct ForwardCache {
  std::uint64_t version = 0;
  const FusionModel* model = nullptr;
  std::size_t rows = 0;
  std::array<DrugCache, 2> drugs;
  std::array<DenseCache, 4> classifier;
};

struct ForwardResult {
  Matrix logits;
  ForwardCache cache;
};

// Throws ErrorCode::kShape when an enabled block has the wrong width or the
// row counts disagree.
ForwardResult forward(const FusionModel& model, const PairBatch& batch);

struct Gradients {
  std::vector<Matrix> params;  // aligned with model.parameters()
  PairBatch inputs;            // d logits-functional / d input features
};

// Reverse-mode gradients given d(objective)/d(logits). Throws
// ErrorCode::kContract if the cache came from another model or the model was
// updated since the forward pass.
Gradients backward(const FusionModel& model, const ForwardCache& cache,
                   const Matrix& grad_logits);

// 1-D max-pool over consecutive windows. `argmax` receives the winning input
// position per output (first on ties).
Matrix max_pool(const Matrix& x, std::size_t window,
                std::vector<std::uint32_t>* argmax = nullptr);
Matrix max_pool_backward(const Matrix& grad_out,
                         const std::vector<std::uint32_t>& argmax,
                         std::size_t input_width);

// Text checkpoint with a config line and shape-tagged tensors in hex floats.
void save_checkpoint(const FusionModel& model, const std::filesystem::path& path);
FusionModel load_checkpoint(const std::filesystem::path& path);
// Loads tensors into an existing model; throws ErrorCode::kSchema on any
// name or shape mismatch.
void load_checkpoint_into(FusionModel& model, const std::filesystem::path& path);

std::string describe(const ModelConfig& config);
ModelConfig parse_model_description(std::string_view text);

}  // namespace tfmd
