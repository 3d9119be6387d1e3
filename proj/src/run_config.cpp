// SPDX-License-Identifier: Apache-2.0
#include "tfmd/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "tfmd/error.hpp"

namespace tfmd {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const auto end = pos == std::string_view::npos ? s.size() : pos;
    out.push_back(trim(s.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, std::string_view value,
                            const char* expected) {
  fail(ErrorCode::kConfig, "key '" + key + "': '" + std::string(value) +
                               "' is not " + expected);
}

double to_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, v, "a finite number");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

std::size_t to_size(const std::string& key, std::string_view v) {
  return static_cast<std::size_t>(to_uint(key, v));
}

bool to_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "a boolean");
}

template <std::size_t N, typename T, typename F>
void to_array(const std::string& key, std::string_view v, std::array<T, N>& out,
              F convert) {
  const auto parts = split_list(v);
  if (parts.size() != N) {
    fail(ErrorCode::kConfig, "key '" + key + "' needs " + std::to_string(N) +
                                 " comma-separated values");
  }
  for (std::size_t i = 0; i < N; ++i) out[i] = convert(key, parts[i]);
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T, std::size_t N>
std::string join(const std::array<T, N>& a) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(a[i]);
    } else {
      out += std::to_string(a[i]);
    }
  }
  return out;
}

SweepParam parse_sweep_param(std::string_view s) {
  if (s == "beta") return SweepParam::kBeta;
  if (s == "ts") return SweepParam::kTs;
  if (s == "gamma") return SweepParam::kGamma;
  fail(ErrorCode::kConfig, "sweep.param must be beta, ts or gamma, not '" +
                               std::string(s) + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", [](RunConfig& c, const std::string& k, std::string_view v) { c.seed = to_uint(k, v); }},
      {"out", [](RunConfig& c, const std::string&, std::string_view v) { c.out = std::string(v); }},

      {"dataset.path", [](RunConfig& c, const std::string&, std::string_view v) { c.dataset_path = std::string(v); }},
      {"dataset.classes", [](RunConfig& c, const std::string& k, std::string_view v) { c.generator.n_classes = to_size(k, v); }},
      {"dataset.samples", [](RunConfig& c, const std::string& k, std::string_view v) { c.generator.n_samples = to_size(k, v); }},
      {"dataset.cir", [](RunConfig& c, const std::string& k, std::string_view v) { c.generator.cir = to_double(k, v); }},
      {"dataset.drugs", [](RunConfig& c, const std::string& k, std::string_view v) { c.generator.n_drugs = to_size(k, v); }},
      {"dataset.dims", [](RunConfig& c, const std::string& k, std::string_view v) { to_array(k, v, c.generator.embed_dims, to_size); }},
      {"dataset.signal", [](RunConfig& c, const std::string& k, std::string_view v) { to_array(k, v, c.generator.signal, to_double); }},
      {"dataset.noise", [](RunConfig& c, const std::string& k, std::string_view v) { to_array(k, v, c.generator.noise, to_double); }},
      {"dataset.drug_scale", [](RunConfig& c, const std::string& k, std::string_view v) { c.generator.drug_scale = to_double(k, v); }},
      {"dataset.seed", [](RunConfig& c, const std::string& k, std::string_view v) { c.dataset_seed = to_uint(k, v); }},

      {"model.hidden", [](RunConfig& c, const std::string& k, std::string_view v) { c.model.hidden_dim = to_size(k, v); }},
      {"model.k_stages", [](RunConfig& c, const std::string& k, std::string_view v) { c.model.k_stages = to_size(k, v); }},
      {"model.classifier", [](RunConfig& c, const std::string& k, std::string_view v) { to_array(k, v, c.model.classifier_hidden, to_size); }},
      {"model.activation", [](RunConfig& c, const std::string&, std::string_view v) { c.model.activation = parse_activation(v); }},
      {"model.pool", [](RunConfig& c, const std::string& k, std::string_view v) { c.model.pool_window = to_size(k, v); }},
      {"model.variant", [](RunConfig& c, const std::string&, std::string_view v) { c.model.modalities = ModalitySet::parse(v); }},

      {"loss.kind", [](RunConfig& c, const std::string&, std::string_view v) { c.loss_kind = parse_loss_kind(v); }},
      {"loss.gamma", [](RunConfig& c, const std::string& k, std::string_view v) { c.loss.gamma = to_double(k, v); }},
      {"loss.beta", [](RunConfig& c, const std::string& k, std::string_view v) { c.loss.beta = to_double(k, v); }},
      {"loss.lambda", [](RunConfig& c, const std::string& k, std::string_view v) { c.loss.lambda = to_double(k, v); }},
      {"loss.margin", [](RunConfig& c, const std::string& k, std::string_view v) { c.loss.margin_c = to_double(k, v); }},
      {"loss.ts", [](RunConfig& c, const std::string& k, std::string_view v) { c.loss.tail_threshold = to_double(k, v); }},

      {"optim.lr", [](RunConfig& c, const std::string& k, std::string_view v) { c.optim.lr = to_double(k, v); }},
      {"optim.beta1", [](RunConfig& c, const std::string& k, std::string_view v) { c.optim.beta1 = to_double(k, v); }},
      {"optim.beta2", [](RunConfig& c, const std::string& k, std::string_view v) { c.optim.beta2 = to_double(k, v); }},
      {"optim.eps", [](RunConfig& c, const std::string& k, std::string_view v) { c.optim.eps = to_double(k, v); }},
      {"optim.batch", [](RunConfig& c, const std::string& k, std::string_view v) { c.optim.batch_size = to_size(k, v); }},
      {"optim.epochs", [](RunConfig& c, const std::string& k, std::string_view v) { c.optim.epochs = to_size(k, v); }},
      {"optim.patience", [](RunConfig& c, const std::string& k, std::string_view v) { c.optim.patience = to_size(k, v); }},
      {"optim.symmetric", [](RunConfig& c, const std::string& k, std::string_view v) { c.optim.symmetric = to_bool(k, v); }},

      {"split.train", [](RunConfig& c, const std::string& k, std::string_view v) { c.split.train = to_double(k, v); }},
      {"split.test", [](RunConfig& c, const std::string& k, std::string_view v) { c.split.test = to_double(k, v); }},
      {"split.stratified", [](RunConfig& c, const std::string& k, std::string_view v) { c.split.stratified = to_bool(k, v); }},

      {"report.tail_ts", [](RunConfig& c, const std::string& k, std::string_view v) { c.report_tail_threshold = to_double(k, v); }},

      {"compare.losses", [](RunConfig& c, const std::string&, std::string_view v) {
         c.compare_losses.clear();
         for (auto part : split_list(v)) c.compare_losses.push_back(parse_loss_kind(part));
       }},
      {"ablate.variants", [](RunConfig& c, const std::string&, std::string_view v) {
         c.variants.clear();
         for (auto part : split_list(v)) {
           ModalitySet::parse(part);
           c.variants.emplace_back(part);
         }
       }},
      {"sweep.param", [](RunConfig& c, const std::string&, std::string_view v) { c.sweep.param = parse_sweep_param(v); }},
      {"sweep.grid", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.sweep.grid.clear();
         for (auto part : split_list(v)) c.sweep.grid.push_back(to_double(k, part));
       }},
      {"sweep.repeats", [](RunConfig& c, const std::string& k, std::string_view v) { c.sweep.repeats = to_size(k, v); }},
  };
  return table;
}

}  // namespace

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kBeta: return "beta";
    case SweepParam::kTs: return "ts";
    case SweepParam::kGamma: return "gamma";
  }
  return "?";
}

void SweepConfig::validate() const {
  if (grid.empty()) fail(ErrorCode::kConfig, "sweep.grid is empty");
  if (repeats < 1) fail(ErrorCode::kConfig, "sweep.repeats must be >= 1");
  for (double v : grid) {
    const bool ok = param == SweepParam::kTs ? (v >= 0.0 && v <= 1.0) : v >= 0.0;
    if (!ok) {
      fail(ErrorCode::kConfig, "sweep value " + fmt(v) + " is outside the domain of " +
                                   std::string(to_string(param)));
    }
  }
}

void RunConfig::validate() const {
  if (!(split.train > 0.0 && split.train < 1.0) ||
      !(split.test > 0.0 && split.test < 1.0) ||
      split.train + split.test > 1.0 + 1e-12) {
    fail(ErrorCode::kConfig, "split fractions must lie in (0, 1) and sum to at most 1");
  }
  if (!(report_tail_threshold >= 0.0 && report_tail_threshold <= 1.0)) {
    fail(ErrorCode::kConfig, "report.tail_ts must lie in [0, 1]");
  }
  if (compare_losses.empty()) fail(ErrorCode::kConfig, "compare.losses is empty");
  if (variants.empty()) fail(ErrorCode::kConfig, "ablate.variants is empty");
  optim.validate();
  sweep.validate();
}

Settings parse_settings(std::string_view text) {
  Settings out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    ++line_no;
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
    }
    out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_settings(ss.str());
}

RunConfig build_run_config(const Settings& settings) {
  RunConfig config;
  if (auto it = settings.find("dataset.preset"); it != settings.end() && !it->second.empty()) {
    config.preset = it->second;
    config.generator = preset_spec(config.preset);
  }
  const auto& table = setters();
  for (const auto& [key, value] : settings) {
    if (key == "dataset.preset") continue;
    const auto it = table.find(key);
    if (it == table.end()) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
    try {
      it->second(config, key, value);
    } catch (const Error& e) {
      // Value parsers shared with the library report parameter errors.
      if (e.code() != ErrorCode::kParameter) throw;
      fail(ErrorCode::kConfig, "key '" + key + "': " + e.what());
    }
  }
  config.validate();
  return config;
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream os;
  const DatasetSpec& g = c.generator;
  os << "seed = " << c.seed << '\n'
     << "out = " << c.out.string() << '\n';
  if (!c.dataset_path.empty()) os << "dataset.path = " << c.dataset_path << '\n';
  if (!c.preset.empty()) os << "dataset.preset = " << c.preset << '\n';
  os << "dataset.classes = " << g.n_classes << '\n'
     << "dataset.samples = " << g.n_samples << '\n'
     << "dataset.cir = " << fmt(g.cir) << '\n'
     << "dataset.drugs = " << g.n_drugs << '\n'
     << "dataset.dims = " << join(g.embed_dims) << '\n'
     << "dataset.signal = " << join(g.signal) << '\n'
     << "dataset.noise = " << join(g.noise) << '\n'
     << "dataset.drug_scale = " << fmt(g.drug_scale) << '\n';
  if (c.dataset_seed) os << "dataset.seed = " << *c.dataset_seed << '\n';
  os << "model.hidden = " << c.model.hidden_dim << '\n'
     << "model.k_stages = " << c.model.k_stages << '\n'
     << "model.classifier = " << join(c.model.classifier_hidden) << '\n'
     << "model.activation = " << to_string(c.model.activation) << '\n'
     << "model.pool = " << c.model.pool_window << '\n'
     << "model.variant = " << c.model.modalities.name() << '\n'
     << "loss.kind = " << to_string(c.loss_kind) << '\n'
     << "loss.gamma = " << fmt(c.loss.gamma) << '\n'
     << "loss.beta = " << fmt(c.loss.beta) << '\n'
     << "loss.lambda = " << fmt(c.loss.lambda) << '\n'
     << "loss.margin = " << fmt(c.loss.margin_c) << '\n'
     << "loss.ts = " << fmt(c.loss.tail_threshold) << '\n'
     << "optim.lr = " << fmt(c.optim.lr) << '\n'
     << "optim.beta1 = " << fmt(c.optim.beta1) << '\n'
     << "optim.beta2 = " << fmt(c.optim.beta2) << '\n'
     << "optim.eps = " << fmt(c.optim.eps) << '\n'
     << "optim.batch = " << c.optim.batch_size << '\n'
     << "optim.epochs = " << c.optim.epochs << '\n'
     << "optim.patience = " << c.optim.patience << '\n'
     << "optim.symmetric = " << (c.optim.symmetric ? "true" : "false") << '\n'
     << "split.train = " << fmt(c.split.train) << '\n'
     << "split.test = " << fmt(c.split.test) << '\n'
     << "split.stratified = " << (c.split.stratified ? "true" : "false") << '\n'
     << "report.tail_ts = " << fmt(c.report_tail_threshold) << '\n';
  os << "compare.losses = ";
  for (std::size_t i = 0; i < c.compare_losses.size(); ++i) {
    os << (i ? "," : "") << to_string(c.compare_losses[i]);
  }
  os << "\nablate.variants = ";
  for (std::size_t i = 0; i < c.variants.size(); ++i) {
    os << (i ? "," : "") << c.variants[i];
  }
  os << "\nsweep.param = " << to_string(c.sweep.param) << "\nsweep.grid = ";
  for (std::size_t i = 0; i < c.sweep.grid.size(); ++i) {
    os << (i ? "," : "") << fmt(c.sweep.grid[i]);
  }
  os << "\nsweep.repeats = " << c.sweep.repeats << '\n';
  return os.str();
}

}  // namespace tfmd
