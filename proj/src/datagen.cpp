// SPDX-License-Identifier: Apache-2.0
#include "tfmd/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "tfmd/error.hpp"

namespace tfmd {
namespace {

constexpr Preset kPresets[] = {
    {"DDIMDL", 37243, 65, 569, 3270.0, "GSTEP"},
    {"MUFFIN", 172426, 81, 1569, 5243.0, "GS"},
    {"DDI-DB110", 198631, 110, 1178, 3304.0, "GSTE"},
    {"DDI-DB171", 199052, 171, 1178, 31390.0, "GSTE"},
};

// Largest-remainder rounding of non-negative reals to integers with a fixed
// sum. Ties go to the lower index.
std::vector<std::int64_t> largest_remainder(std::span<const double> values,
                                            std::int64_t target) {
  std::vector<std::int64_t> out(values.size());
  std::vector<std::pair<double, std::size_t>> frac(values.size());
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std::floor(values[i]);
    out[i] = static_cast<std::int64_t>(f);
    frac[i] = {values[i] - f, i};
    sum += out[i];
  }
  std::stable_sort(frac.begin(), frac.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; sum < target; k = (k + 1) % frac.size()) {
    ++out[frac[k].second];
    ++sum;
  }
  return out;
}

// Pure geometric profile n0 r^i with ratio cir between the ends, integerized
// with largest remainders and a floor of one sample per class.
std::vector<std::int64_t> geometric_counts(std::size_t n_classes,
                                           std::int64_t n_samples, double cir) {
  const double last = static_cast<double>(n_classes - 1);
  const double r = n_classes > 1 ? std::pow(cir, -1.0 / last) : 1.0;
  std::vector<double> ideal(n_classes);
  double norm = 0.0;
  for (std::size_t i = 0; i < n_classes; ++i) {
    ideal[i] = std::pow(r, static_cast<double>(i));
    norm += ideal[i];
  }
  for (double& v : ideal) v *= static_cast<double>(n_samples) / norm;
  std::vector<std::int64_t> counts = largest_remainder(ideal, n_samples);
  // Lift empty classes to one sample, paying from the largest classes.
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] >= 1) continue;
    const std::int64_t need = 1 - counts[i];
    counts[i] = 1;
    for (std::int64_t k = 0; k < need; ++k) {
      auto it = std::max_element(counts.begin(), counts.end());
      --*it;
    }
  }
  return counts;
}

// Interior profile h (t/h)^((i/(N-1))^alpha) for i = 1 .. N-2.
std::vector<double> warped_interior(std::size_t n_classes, double head,
                                    double tail, double alpha) {
  const double last = static_cast<double>(n_classes - 1);
  const double log_ratio = std::log(tail / head);
  std::vector<double> v(n_classes - 2);
  for (std::size_t i = 1; i + 1 < n_classes; ++i) {
    const double x = std::pow(static_cast<double>(i) / last, alpha);
    v[i - 1] = head * std::exp(x * log_ratio);
  }
  return v;
}

double sum_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

void DatasetSpec::validate() const {
  if (n_classes < 2) fail(ErrorCode::kSpec, "dataset needs at least 2 classes");
  if (n_samples < n_classes) {
    fail(ErrorCode::kSpec, "n_samples (" + std::to_string(n_samples) +
                               ") must be >= n_classes (" +
                               std::to_string(n_classes) + ")");
  }
  if (!(cir >= 1.0) || !std::isfinite(cir)) {
    fail(ErrorCode::kSpec, "cir must be a finite value >= 1");
  }
  if (n_drugs < 2) fail(ErrorCode::kSpec, "need at least 2 drugs");
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (embed_dims[m] == 0) fail(ErrorCode::kSpec, "embedding widths must be >= 1");
    if (!(signal[m] >= 0.0) || !std::isfinite(signal[m]) || !(noise[m] >= 0.0) ||
        !std::isfinite(noise[m])) {
      fail(ErrorCode::kSpec, "signal and noise scales must be finite and >= 0");
    }
  }
  if (!(drug_scale >= 0.0) || !std::isfinite(drug_scale)) {
    fail(ErrorCode::kSpec, "drug_scale must be finite and >= 0");
  }
}

std::span<const Preset> presets() { return kPresets; }

DatasetSpec preset_spec(std::string_view name) {
  for (const Preset& p : kPresets) {
    if (p.name == name) {
      DatasetSpec spec;
      spec.n_classes = p.n_classes;
      spec.n_samples = p.n_samples;
      spec.n_drugs = p.n_drugs;
      spec.cir = p.cir;
      return spec;
    }
  }
  fail(ErrorCode::kSpec, "unknown preset '" + std::string(name) + "'");
}

std::vector<std::int64_t> sample_class_counts(const DatasetSpec& spec) {
  spec.validate();
  const std::size_t classes = spec.n_classes;
  const auto total = static_cast<std::int64_t>(spec.n_samples);
  const double cir = spec.cir;

  // Tail estimate from the pure geometric profile.
  const double last = static_cast<double>(classes - 1);
  const double r = std::pow(cir, -1.0 / last);
  const double head_geo =
      cir == 1.0 ? static_cast<double>(total) / static_cast<double>(classes)
                 : static_cast<double>(total) * (1.0 - r) /
                       (1.0 - std::pow(r, static_cast<double>(classes)));
  std::int64_t tail = std::max<std::int64_t>(1, std::llround(head_geo / cir));

  if (classes == 2) {
    // The sum pins head = total - t; take the integer t nearest the ratio.
    const double ideal = static_cast<double>(total) / (1.0 + cir);
    std::int64_t best = 1;
    double best_err = std::numeric_limits<double>::infinity();
    for (auto t : {static_cast<std::int64_t>(std::floor(ideal)),
                   static_cast<std::int64_t>(std::ceil(ideal))}) {
      t = std::clamp<std::int64_t>(t, 1, total / 2);
      const double err =
          std::abs(static_cast<double>(total - t) / static_cast<double>(t) / cir - 1.0);
      if (err < best_err) {
        best_err = err;
        best = t;
      }
    }
    return {total - best, best};
  }

  // Search an integer tail t so that the interior budget fits between the
  // endpoints; give up on direction reversal.
  const auto interior = static_cast<std::int64_t>(classes - 2);
  int direction = 0;
  std::int64_t head = 0;
  bool feasible = false;
  for (int guard = 0; guard < 1000000; ++guard) {
    head = std::llround(cir * static_cast<double>(tail));
    const std::int64_t budget = total - head - tail;
    if (budget < interior * tail) {
      if (tail == 1 || direction > 0) break;
      direction = -1;
      --tail;
    } else if (budget > interior * head) {
      if (direction < 0) break;
      direction = 1;
      ++tail;
    } else {
      feasible = true;
      break;
    }
  }
  if (!feasible) return geometric_counts(classes, total, cir);

  const std::int64_t budget = total - head - tail;
  std::vector<std::int64_t> counts(classes);
  counts.front() = head;
  counts.back() = tail;
  const auto h = static_cast<double>(head);
  const auto t = static_cast<double>(tail);

  std::vector<double> ideal;
  if (budget == interior * tail || head == tail) {
    ideal.assign(static_cast<std::size_t>(interior), t);
  } else if (budget == interior * head) {
    ideal.assign(static_cast<std::size_t>(interior), h);
  } else {
    // The interior sum grows monotonically with the warp exponent.
    double lo = -40.0, hi = 40.0;  // log2(alpha)
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double s = sum_of(warped_interior(classes, h, t, std::exp2(mid)));
      (s < static_cast<double>(budget) ? lo : hi) = mid;
    }
    ideal = warped_interior(classes, h, t, std::exp2(0.5 * (lo + hi)));
    // Rescale the tiny residual so largest-remainder rounding hits the budget.
    const double s = sum_of(ideal);
    for (double& v : ideal) v = std::clamp(v * static_cast<double>(budget) / s, t, h);
  }
  std::vector<std::int64_t> mid = largest_remainder(ideal, budget);
  std::int64_t sum = std::accumulate(mid.begin(), mid.end(), std::int64_t{0});
  // Clamping may leave a surplus; trim from the largest interior classes.
  while (sum > budget) {
    --*std::max_element(mid.begin(), mid.end());
    --sum;
  }
  for (std::size_t i = 0; i < mid.size(); ++i) {
    counts[i + 1] = std::clamp(mid[i], tail, head);
  }
  return counts;
}

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].label;
  return out;
}

ClassStats Dataset::stats() const {
  const std::vector<std::size_t> y = labels();
  return class_stats_from_labels(y, n_classes);
}

Dataset generate_dataset(const DatasetSpec& spec) {
  const std::vector<std::int64_t> counts = sample_class_counts(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // prototypes[m][side][class] and offsets[m][drug].
  std::array<std::array<std::vector<std::vector<double>>, 2>, kNumModalities>
      prototypes;
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    for (auto& side : prototypes[m]) {
      side.assign(spec.n_classes, std::vector<double>(spec.embed_dims[m]));
      for (auto& proto : side) {
        for (double& v : proto) v = spec.signal[m] * normal(rng);
      }
    }
  }
  std::array<std::vector<std::vector<double>>, kNumModalities> offsets;
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    offsets[m].assign(spec.n_drugs, std::vector<double>(spec.embed_dims[m]));
    for (auto& off : offsets[m]) {
      for (double& v : off) v = spec.drug_scale * normal(rng);
    }
  }

  std::vector<std::size_t> labels;
  labels.reserve(spec.n_samples);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    labels.insert(labels.end(), static_cast<std::size_t>(counts[c]), c);
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  std::uniform_int_distribution<std::uint32_t> pick_drug(
      0, static_cast<std::uint32_t>(spec.n_drugs - 1));
  const int width = static_cast<int>(std::to_string(spec.n_samples).size());

  Dataset out;
  out.n_classes = spec.n_classes;
  out.dims = spec.embed_dims;
  out.records.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Record& rec = out.records[i];
    char id[32];
    std::snprintf(id, sizeof(id), "P%0*zu", width, i);
    rec.pair_id = id;
    rec.label = labels[i];
    std::uint32_t a = pick_drug(rng);
    std::uint32_t b = pick_drug(rng);
    while (b == a) b = pick_drug(rng);
    rec.drug_a = std::min(a, b);
    rec.drug_b = std::max(a, b);

    auto fill = [&](DrugFeatures& f, std::size_t side, std::uint32_t drug) {
      for (std::size_t m = 0; m < kNumModalities; ++m) {
        const auto& proto = prototypes[m][side][rec.label];
        const auto& off = offsets[m][drug];
        f[m].resize(spec.embed_dims[m]);
        for (std::size_t j = 0; j < f[m].size(); ++j) {
          f[m][j] = static_cast<float>(proto[j] + off[j] +
                                       spec.noise[m] * normal(rng));
        }
      }
    };
    fill(rec.features_a, 0, rec.drug_a);
    fill(rec.features_b, 1, rec.drug_b);
  }
  return out;
}

std::vector<double> jaccard_similarity_profile(
    const BitProfile& profile, std::span<const BitProfile> others,
    const JaccardOptions& options) {
  std::vector<double> out;
  out.reserve(others.size());
  for (const BitProfile& other : others) {
    if (other.bits.size() != profile.bits.size()) {
      fail(ErrorCode::kInput, "bit profile width mismatch for drug " +
                                  std::to_string(other.drug_id));
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < profile.bits.size(); ++k) {
      const bool a = profile.bits[k] != 0;
      const bool b = other.bits[k] != 0;
      inter += (a && b);
      uni += (a || b);
    }
    double v = 0.0;
    if (options.mode == JaccardMode::kStandard) {
      v = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    } else if (uni == 0) {
      v = 0.0;
    } else if (uni == inter) {
      v = options.identical_cap;
    } else {
      v = static_cast<double>(inter) / static_cast<double>(uni - inter);
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace tfmd
