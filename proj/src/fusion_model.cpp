// SPDX-License-Identifier: Apache-2.0
#include "tfmd/fusion_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "tfmd/error.hpp"

namespace tfmd {
namespace {

constexpr std::size_t kG = 0, kS = 1, kT = 2, kE = 3;
constexpr std::size_t kNoPartner = kNumModalities;
constexpr std::string_view kCheckpointMagic = "#tfmd-checkpoint v1";

// Graph is enhanced by sequence, target by enzyme.
constexpr std::size_t partner_of(std::size_t m) {
  return m == kG ? kS : m == kT ? kE : kNoPartner;
}

std::size_t enhancing_partner(const ModalitySet& mods, std::size_t m) {
  const std::size_t p = partner_of(m);
  return (p != kNoPartner && mods.has(p)) ? p : kNoPartner;
}

// Samples per inner tile; the per-sample accumulation order is independent
// of tiling, so batched and single-row results agree bit for bit.
constexpr std::size_t kTile = 8;

// out = x W + b, W stored (in, out).
void dense_forward(const Matrix& w, const Matrix& b, const Matrix& x,
                   Matrix& out) {
  const std::size_t rows = x.rows(), in = w.rows(), width = w.cols();
  out = Matrix(rows, width);
  const double* bias = b.data().data();
  for (std::size_t s0 = 0; s0 < rows; s0 += kTile) {
    const std::size_t s1 = std::min(rows, s0 + kTile);
    for (std::size_t s = s0; s < s1; ++s) {
      std::copy(bias, bias + width, out.row(s).data());
    }
    for (std::size_t i = 0; i < in; ++i) {
      const double* wi = w.row(i).data();
      for (std::size_t s = s0; s < s1; ++s) {
        const double xi = x(s, i);
        if (xi == 0.0) continue;
        double* z = out.row(s).data();
        for (std::size_t o = 0; o < width; ++o) z[o] += xi * wi[o];
      }
    }
  }
}

void activate(Activation act, const Matrix& pre, Matrix& out) {
  out = pre;
  if (act == Activation::kRelu) {
    for (double& v : out.data()) v = v < 0.0 ? 0.0 : v;  // NaN propagates
  } else {
    for (double& v : out.data()) v = std::tanh(v);
  }
}

// grad_pre = grad_out * act'(pre) in place on grad_out.
void activate_backward(Activation act, const DenseCache& c, Matrix& grad) {
  auto& g = grad.data();
  if (act == Activation::kRelu) {
    const auto& pre = c.pre.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(pre[i] > 0.0)) g[i] = 0.0;
    }
  } else {
    const auto& out = c.out.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - out[i] * out[i];
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// Accumulates dW, db and returns dX for out = x W + b.
Matrix dense_backward(const Matrix& w, const Matrix& x, const Matrix& grad_pre,
                      Matrix& grad_w, Matrix& grad_b, bool need_input_grad) {
  const std::size_t rows = x.rows(), in = w.rows(), width = w.cols();
  double* db = grad_b.row(0).data();
  for (std::size_t s = 0; s < rows; ++s) {
    const double* g = grad_pre.row(s).data();
    for (std::size_t o = 0; o < width; ++o) db[o] += g[o];
  }
  // Sample tiles keep each dW row hot; every dW entry still sums over
  // samples in ascending order.
  for (std::size_t s0 = 0; s0 < rows; s0 += kTile) {
    const std::size_t s1 = std::min(rows, s0 + kTile);
    for (std::size_t i = 0; i < in; ++i) {
      double* dw = grad_w.row(i).data();
      for (std::size_t s = s0; s < s1; ++s) {
        const double xi = x(s, i);
        if (xi == 0.0) continue;
        const double* g = grad_pre.row(s).data();
        for (std::size_t o = 0; o < width; ++o) dw[o] += xi * g[o];
      }
    }
  }
  Matrix grad_x;
  if (!need_input_grad) return grad_x;
  grad_x = Matrix(rows, in);
  for (std::size_t s = 0; s < rows; ++s) {
    const double* g = grad_pre.row(s).data();
    for (std::size_t i = 0; i < in; ++i) {
      grad_x(s, i) = dot(w.row(i).data(), g, width);
    }
  }
  return grad_x;
}

Matrix hconcat(std::span<const Matrix* const> parts) {
  const std::size_t rows = parts.front()->rows();
  std::size_t cols = 0;
  for (const Matrix* p : parts) cols += p->cols();
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.row(r).data();
    for (const Matrix* p : parts) {
      auto src = p->row(r);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

// Adds columns [offset, offset + dst.cols()) of src into dst.
void add_columns(const Matrix& src, std::size_t offset, Matrix& dst) {
  for (std::size_t r = 0; r < dst.rows(); ++r) {
    auto s = src.row(r).subspan(offset, dst.cols());
    auto d = dst.row(r);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += s[j];
  }
}

Matrix columns(const Matrix& src, std::size_t offset, std::size_t width) {
  Matrix out(src.rows(), width);
  add_columns(src, offset, out);
  return out;
}

void add_into(Matrix& dst, const Matrix& src) {
  auto& d = dst.data();
  const auto& s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

struct DrugForward {
  std::array<Matrix, kNumModalities> final;
  std::array<Matrix, kNumModalities> pooled;
};

DrugForward encode_drug(const FusionModel& model,
                        const std::array<Matrix, kNumModalities>& inputs,
                        DrugCache& cache) {
  const ModelConfig& cfg = model.config();
  const auto& params = model.parameters();
  DrugForward out;
  std::array<const Matrix*, kNumModalities> current{};
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (!cfg.modalities.has(m)) continue;
    current[m] = &inputs[m];
    cache.input_width[m] = inputs[m].cols();
    cache.stages[m].resize(cfg.k_stages);
  }
  for (std::size_t k = 0; k < cfg.k_stages; ++k) {
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (!cfg.modalities.has(m)) continue;
      DenseCache& c = cache.stages[m][k];
      const std::size_t p = enhancing_partner(cfg.modalities, m);
      if (p != kNoPartner) {
        const Matrix* parts[] = {current[m], current[p]};
        c.input = hconcat(parts);
      } else {
        c.input = *current[m];
      }
      const FusionModel::Dense& d = model.encoder(k, m);
      dense_forward(params[d.weight].value, params[d.bias].value, c.input, c.pre);
      activate(cfg.activation, c.pre, c.out);
    }
    // Every stage reads stage k-1 values of all modalities.
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (cfg.modalities.has(m)) current[m] = &cache.stages[m][k].out;
    }
  }
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (!cfg.modalities.has(m)) continue;
    out.final[m] = *current[m];
    out.pooled[m] = max_pool(inputs[m], cfg.pool_window, &cache.pool_argmax[m]);
  }
  return out;
}

Matrix fuse(const ModelConfig& cfg, const DrugForward& drug) {
  std::vector<const Matrix*> parts;
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (cfg.modalities.has(m)) parts.push_back(&drug.final[m]);
  }
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (cfg.modalities.has(m)) parts.push_back(&drug.pooled[m]);
  }
  return hconcat(parts);
}

void check_block(const Matrix& block, std::size_t rows, std::size_t width,
                 std::size_t m, char side) {
  if (block.rows() != rows || block.cols() != width) {
    fail(ErrorCode::kShape,
         std::string("drug ") + side + " block '" + kModalityLetters[m] +
             "' is " + std::to_string(block.rows()) + "x" +
             std::to_string(block.cols()) + ", expected " +
             std::to_string(rows) + "x" + std::to_string(width));
  }
}

// Backward through one drug's encoder; accumulates parameter gradients and
// returns input gradients.
std::array<Matrix, kNumModalities> encode_backward(
    const FusionModel& model, const DrugCache& cache, const Matrix& grad_fused,
    std::vector<Matrix>& grads) {
  const ModelConfig& cfg = model.config();
  const std::size_t rows = grad_fused.rows();
  const std::size_t pool_window = cfg.pool_window;

  std::array<Matrix, kNumModalities> grad_cur;
  std::array<Matrix, kNumModalities> grad_input;
  std::size_t offset = 0;
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (!cfg.modalities.has(m)) continue;
    grad_cur[m] = columns(grad_fused, offset, cfg.hidden_dim);
    offset += cfg.hidden_dim;
  }
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (!cfg.modalities.has(m)) continue;
    const std::size_t width = cache.input_width[m];
    const Matrix grad_pool = columns(grad_fused, offset, width / pool_window);
    offset += width / pool_window;
    grad_input[m] = max_pool_backward(grad_pool, cache.pool_argmax[m], width);
  }

  for (std::size_t k = cfg.k_stages; k-- > 0;) {
    std::array<Matrix, kNumModalities> grad_prev;
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (!cfg.modalities.has(m)) continue;
      grad_prev[m] = Matrix(rows, k == 0 ? cache.input_width[m] : cfg.hidden_dim);
    }
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (!cfg.modalities.has(m)) continue;
      const DenseCache& c = cache.stages[m][k];
      const FusionModel::Dense& d = model.encoder(k, m);
      Matrix grad_pre = std::move(grad_cur[m]);
      activate_backward(cfg.activation, c, grad_pre);
      const Matrix grad_in =
          dense_backward(model.parameters()[d.weight].value, c.input, grad_pre,
                         grads[d.weight], grads[d.bias], true);
      add_columns(grad_in, 0, grad_prev[m]);
      const std::size_t p = enhancing_partner(cfg.modalities, m);
      if (p != kNoPartner) add_columns(grad_in, grad_prev[m].cols(), grad_prev[p]);
    }
    grad_cur = std::move(grad_prev);
  }
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (cfg.modalities.has(m)) add_into(grad_input[m], grad_cur[m]);
  }
  return grad_input;
}

}  // namespace

std::string_view to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  fail(ErrorCode::kConfig, "unknown activation '" + std::string(name) + "'");
}

ModalitySet ModalitySet::parse(std::string_view name) {
  ModalitySet s;
  s.enabled_.fill(false);
  for (char ch : name) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    const std::size_t m = up == 'G' ? kG : up == 'S' ? kS : up == 'T' ? kT
                        : up == 'E' ? kE : kNoPartner;
    if (m == kNoPartner || s.enabled_[m]) {
      fail(ErrorCode::kUsage, "unknown modality variant '" + std::string(name) +
                                  "' (expected letters from GSTE)");
    }
    s.enabled_[m] = true;
  }
  if (name.empty()) fail(ErrorCode::kUsage, "empty modality variant");
  return s;
}

std::string ModalitySet::name() const {
  std::string out;
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (enabled_[m]) out.push_back("GSTE"[m]);
  }
  return out;
}

void ModelConfig::validate() const {
  if (n_classes < 2) fail(ErrorCode::kConfig, "model needs n_classes >= 2");
  if (k_stages < 1) fail(ErrorCode::kConfig, "k_stages must be >= 1");
  if (hidden_dim < 1) fail(ErrorCode::kConfig, "hidden_dim must be >= 1");
  if (pool_window < 1) fail(ErrorCode::kConfig, "pool_window must be >= 1");
  for (std::size_t w : classifier_hidden) {
    if (w < 1) fail(ErrorCode::kConfig, "classifier widths must be >= 1");
  }
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (!modalities.has(m)) continue;
    if (embed_dims[m] == 0 || embed_dims[m] % pool_window != 0) {
      fail(ErrorCode::kConfig, std::string("embedding width of '") +
                                   kModalityLetters[m] +
                                   "' must be a positive multiple of pool_window");
    }
  }
}

std::size_t ModelConfig::fused_width() const {
  std::size_t w = 0;
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (modalities.has(m)) w += hidden_dim + embed_dims[m] / pool_window;
  }
  return w;
}

FusionModel::FusionModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  encoder_.resize(config_.k_stages);
  for (std::size_t k = 0; k < config_.k_stages; ++k) {
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (!config_.modalities.has(m)) continue;
      const std::size_t p = enhancing_partner(config_.modalities, m);
      std::size_t in = k == 0 ? config_.embed_dims[m] : config_.hidden_dim;
      if (p != kNoPartner) in += k == 0 ? config_.embed_dims[p] : config_.hidden_dim;
      const std::string prefix = std::string("enc.") + kModalityLetters[m] +
                                 ".stage" + std::to_string(k + 1);
      encoder_[k][m] = dense_[add_dense(prefix, in, config_.hidden_dim)];
    }
  }
  std::size_t in = 2 * config_.fused_width();
  for (std::size_t j = 0; j < 4; ++j) {
    const std::size_t out = j < 3 ? config_.classifier_hidden[j] : config_.n_classes;
    classifier_[j] = dense_[add_dense("cls.layer" + std::to_string(j + 1), in, out)];
    in = out;
  }
}

std::size_t FusionModel::add_dense(const std::string& prefix, std::size_t in,
                                   std::size_t out) {
  Dense d;
  d.in = in;
  d.out = out;
  d.weight = params_.size();
  params_.push_back({prefix + ".weight", Matrix(in, out)});
  d.bias = params_.size();
  params_.push_back({prefix + ".bias", Matrix(1, out)});
  dense_.push_back(d);
  return dense_.size() - 1;
}

FusionModel FusionModel::init(const ModelConfig& config, std::uint64_t seed) {
  FusionModel model(config);
  std::mt19937_64 rng(seed);
  for (const Dense& d : model.dense_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(d.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : model.params_[d.weight].value.data()) v = dist(rng);
  }
  return model;
}

std::size_t FusionModel::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  fail(ErrorCode::kContract, "no parameter named '" + std::string(name) + "'");
}

std::size_t FusionModel::num_scalars() const {
  std::size_t n = 0;
  for (const Tensor& t : params_) n += t.value.size();
  return n;
}

std::size_t PairBatch::rows() const {
  for (const Matrix& m : a) {
    if (!m.empty() || m.rows() > 0) return m.rows();
  }
  return 0;
}

PairBatch make_batch(std::span<const Record> records,
                     std::span<const std::size_t> indices,
                     std::span<const bool> swapped) {
  PairBatch batch;
  if (indices.empty()) return batch;
  const Record& first = records[indices.front()];
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    batch.a[m] = Matrix(indices.size(), first.features_a[m].size());
    batch.b[m] = Matrix(indices.size(), first.features_b[m].size());
  }
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Record& rec = records[indices[r]];
    const bool swap = !swapped.empty() && swapped[r];
    const DrugFeatures& fa = swap ? rec.features_b : rec.features_a;
    const DrugFeatures& fb = swap ? rec.features_a : rec.features_b;
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      if (fa[m].size() != batch.a[m].cols() || fb[m].size() != batch.b[m].cols()) {
        fail(ErrorCode::kShape, "record " + rec.pair_id + " has inconsistent block widths");
      }
      std::copy(fa[m].begin(), fa[m].end(), batch.a[m].row(r).begin());
      std::copy(fb[m].begin(), fb[m].end(), batch.b[m].row(r).begin());
    }
  }
  return batch;
}

Matrix max_pool(const Matrix& x, std::size_t window,
                std::vector<std::uint32_t>* argmax) {
  const std::size_t width = x.cols() / window;
  Matrix out(x.rows(), width);
  if (argmax) argmax->assign(x.rows() * width, 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t j = 0; j < width; ++j) {
      std::size_t best = j * window;
      for (std::size_t i = best + 1; i < (j + 1) * window; ++i) {
        if (row[i] > row[best]) best = i;
      }
      out(r, j) = row[best];
      if (argmax) (*argmax)[r * width + j] = static_cast<std::uint32_t>(best);
    }
  }
  return out;
}

Matrix max_pool_backward(const Matrix& grad_out,
                         const std::vector<std::uint32_t>& argmax,
                         std::size_t input_width) {
  Matrix grad(grad_out.rows(), input_width);
  const std::size_t width = grad_out.cols();
  for (std::size_t r = 0; r < grad_out.rows(); ++r) {
    for (std::size_t j = 0; j < width; ++j) {
      grad(r, argmax[r * width + j]) += grad_out(r, j);
    }
  }
  return grad;
}

ForwardResult forward(const FusionModel& model, const PairBatch& batch) {
  const ModelConfig& cfg = model.config();
  const std::size_t rows = batch.rows();
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (!cfg.modalities.has(m)) continue;
    check_block(batch.a[m], rows, cfg.embed_dims[m], m, 'a');
    check_block(batch.b[m], rows, cfg.embed_dims[m], m, 'b');
  }

  ForwardResult res;
  ForwardCache& cache = res.cache;
  cache.version = model.version();
  cache.model = &model;
  cache.rows = rows;
  const DrugForward da = encode_drug(model, batch.a, cache.drugs[0]);
  const DrugForward db = encode_drug(model, batch.b, cache.drugs[1]);
  const Matrix fa = fuse(cfg, da);
  const Matrix fb = fuse(cfg, db);
  const Matrix* pair[] = {&fa, &fb};
  cache.classifier[0].input = hconcat(pair);

  const auto& params = model.parameters();
  for (std::size_t j = 0; j < 4; ++j) {
    DenseCache& c = cache.classifier[j];
    if (j > 0) c.input = cache.classifier[j - 1].out;
    const FusionModel::Dense& d = model.classifier(j);
    dense_forward(params[d.weight].value, params[d.bias].value, c.input, c.pre);
    if (j < 3) {
      activate(cfg.activation, c.pre, c.out);
    } else {
      c.out = c.pre;
    }
  }
  res.logits = cache.classifier[3].out;
  return res;
}

Gradients backward(const FusionModel& model, const ForwardCache& cache,
                   const Matrix& grad_logits) {
  if (cache.model != &model || cache.version != model.version()) {
    fail(ErrorCode::kContract,
         "forward cache is stale: model parameters changed since the forward pass");
  }
  const ModelConfig& cfg = model.config();
  if (grad_logits.rows() != cache.rows || grad_logits.cols() != cfg.n_classes) {
    fail(ErrorCode::kShape, "grad_logits shape does not match the forward batch");
  }
  const auto& params = model.parameters();
  Gradients out;
  out.params.reserve(params.size());
  for (const Tensor& t : params) {
    out.params.emplace_back(t.value.rows(), t.value.cols());
  }

  Matrix grad = grad_logits;
  for (std::size_t j = 4; j-- > 0;) {
    const DenseCache& c = cache.classifier[j];
    if (j < 3) activate_backward(cfg.activation, c, grad);
    const FusionModel::Dense& d = model.classifier(j);
    grad = dense_backward(params[d.weight].value, c.input, grad,
                          out.params[d.weight], out.params[d.bias], true);
  }
  const std::size_t fw = cfg.fused_width();
  const Matrix grad_a = columns(grad, 0, fw);
  const Matrix grad_b = columns(grad, fw, fw);
  out.inputs.a = encode_backward(model, cache.drugs[0], grad_a, out.params);
  out.inputs.b = encode_backward(model, cache.drugs[1], grad_b, out.params);
  return out;
}

std::string describe(const ModelConfig& c) {
  std::ostringstream os;
  os << "embed_dims=" << c.embed_dims[0] << ',' << c.embed_dims[1] << ','
     << c.embed_dims[2] << ',' << c.embed_dims[3] << " hidden=" << c.hidden_dim
     << " k_stages=" << c.k_stages << " classifier=" << c.classifier_hidden[0]
     << ',' << c.classifier_hidden[1] << ',' << c.classifier_hidden[2]
     << " activation=" << to_string(c.activation) << " pool=" << c.pool_window
     << " classes=" << c.n_classes << " modalities=" << c.modalities.name();
  return os.str();
}

ModelConfig parse_model_description(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kSchema, "bad model description token '" + tok + "'");
    }
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::kSchema, "model description lacks '" + key + "'");
    return it->second;
  };
  auto number = [](const std::string& s) -> std::size_t {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      fail(ErrorCode::kSchema, "bad number '" + s + "' in model description");
    }
    return v;
  };
  auto list = [&](const std::string& s, std::span<std::size_t> dst) {
    std::istringstream ls(s);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ls, part, ',')) {
      if (i >= dst.size()) fail(ErrorCode::kSchema, "too many values in '" + s + "'");
      dst[i++] = number(part);
    }
    if (i != dst.size()) fail(ErrorCode::kSchema, "too few values in '" + s + "'");
  };
  ModelConfig c;
  list(get("embed_dims"), c.embed_dims);
  c.hidden_dim = number(get("hidden"));
  c.k_stages = number(get("k_stages"));
  list(get("classifier"), c.classifier_hidden);
  c.activation = parse_activation(get("activation"));
  c.pool_window = number(get("pool"));
  c.n_classes = number(get("classes"));
  c.modalities = ModalitySet::parse(get("modalities"));
  return c;
}

void save_checkpoint(const FusionModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  os << kCheckpointMagic << '\n' << "config " << describe(model.config()) << '\n';
  char buf[64];
  for (const Tensor& t : model.parameters()) {
    os << "tensor " << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << '\n';
    for (std::size_t r = 0; r < t.value.rows(); ++r) {
      for (std::size_t c = 0; c < t.value.cols(); ++c) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), t.value(r, c),
                                       std::chars_format::hex);
        if (c) os << ' ';
        os.write(buf, res.ptr - buf);
      }
      os << '\n';
    }
  }
  if (!os) fail(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

namespace {

ModelConfig read_checkpoint_header(std::istream& is, const std::string& where) {
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointMagic) {
    fail(ErrorCode::kSchema, where + ": not a tfmd checkpoint");
  }
  if (!std::getline(is, line) || !line.starts_with("config ")) {
    fail(ErrorCode::kSchema, where + ": missing config line");
  }
  return parse_model_description(std::string_view(line).substr(7));
}

void read_tensors(std::istream& is, FusionModel& model, const std::string& where) {
  std::string line;
  for (Tensor& t : model.parameters()) {
    if (!std::getline(is, line)) fail(ErrorCode::kSchema, where + ": missing tensor " + t.name);
    std::istringstream hs(line);
    std::string tag, name;
    std::size_t rows = 0, cols = 0;
    hs >> tag >> name >> rows >> cols;
    if (tag != "tensor" || name != t.name || rows != t.value.rows() ||
        cols != t.value.cols()) {
      fail(ErrorCode::kSchema,
           where + ": expected tensor " + t.name + " " +
               std::to_string(t.value.rows()) + "x" + std::to_string(t.value.cols()) +
               ", found '" + line + "'");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(is, line)) fail(ErrorCode::kSchema, where + ": truncated tensor " + t.name);
      std::size_t c = 0;
      const char* p = line.data();
      const char* end = line.data() + line.size();
      while (p < end && c < cols) {
        while (p < end && *p == ' ') ++p;
        double v = 0.0;
        const auto res = std::from_chars(p, end, v, std::chars_format::hex);
        if (res.ec != std::errc()) fail(ErrorCode::kSchema, where + ": bad value in " + t.name);
        t.value(r, c++) = v;
        p = res.ptr;
      }
      if (c != cols) fail(ErrorCode::kSchema, where + ": short row in " + t.name);
    }
  }
  model.mark_updated();
}

}  // namespace

FusionModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  FusionModel model = FusionModel::init(read_checkpoint_header(is, path.string()), 0);
  read_tensors(is, model, path.string());
  return model;
}

void load_checkpoint_into(FusionModel& model, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  const ModelConfig stored = read_checkpoint_header(is, path.string());
  if (describe(stored) != describe(model.config())) {
    fail(ErrorCode::kSchema, path.string() + ": checkpoint config '" +
                                 describe(stored) + "' does not match model '" +
                                 describe(model.config()) + "'");
  }
  read_tensors(is, model, path.string());
}

}  // namespace tfmd
