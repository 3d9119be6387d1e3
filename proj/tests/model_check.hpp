// SPDX-License-Identifier: Apache-2.0
//
// Naive reference forward pass and the finite-difference backward check for
// FusionModel, shared by the unit tests and the acceptance runner.
#pragma once

#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tfmd/fusion_model.hpp"

namespace tfmd::testing {

using Vec = std::vector<double>;

// One drug's four raw blocks; disabled modalities may be empty.
using DrugInput = std::array<Vec, 4>;

inline Vec ref_dense(const FusionModel& model, const std::string& prefix, const Vec& x) {
  const Matrix& w = model.parameters()[model.index_of(prefix + ".weight")].value;
  const Matrix& b = model.parameters()[model.index_of(prefix + ".bias")].value;
  Vec out(w.cols());
  for (std::size_t o = 0; o < w.cols(); ++o) {
    double s = b(0, o);
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w(i, o);
    out[o] = s;
  }
  return out;
}

inline Vec ref_act(Activation a, Vec v) {
  for (double& x : v) x = a == Activation::kRelu ? std::max(0.0, x) : std::tanh(x);
  return v;
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Vec ref_fused(const FusionModel& model, const DrugInput& x) {
  const ModelConfig& c = model.config();
  const char letters[] = {'g', 's', 't', 'e'};
  // Graph takes sequence, target takes enzyme.
  const int partner[] = {1, -1, 3, -1};
  std::array<Vec, 4> cur = x;
  for (std::size_t k = 1; k <= c.k_stages; ++k) {
    std::array<Vec, 4> next;
    for (int m = 0; m < 4; ++m) {
      if (!c.modalities.has(static_cast<std::size_t>(m))) continue;
      Vec in = cur[m];
      const int p = partner[m];
      if (p >= 0 && c.modalities.has(static_cast<std::size_t>(p))) in = concat(in, cur[p]);
      const std::string prefix =
          std::string("enc.") + letters[m] + ".stage" + std::to_string(k);
      next[m] = ref_act(c.activation, ref_dense(model, prefix, in));
    }
    cur = next;
  }
  Vec fused;
  for (int m = 0; m < 4; ++m) {
    if (c.modalities.has(static_cast<std::size_t>(m))) fused = concat(fused, cur[m]);
  }
  for (int m = 0; m < 4; ++m) {
    if (!c.modalities.has(static_cast<std::size_t>(m))) continue;
    for (std::size_t j = 0; j + c.pool_window <= x[m].size(); j += c.pool_window) {
      fused.push_back(*std::max_element(x[m].begin() + j, x[m].begin() + j + c.pool_window));
    }
  }
  return fused;
}

inline Vec ref_forward(const FusionModel& model, const DrugInput& a, const DrugInput& b) {
  Vec h = concat(ref_fused(model, a), ref_fused(model, b));
  for (int j = 1; j <= 3; ++j) {
    h = ref_act(model.config().activation,
                ref_dense(model, "cls.layer" + std::to_string(j), h));
  }
  return ref_dense(model, "cls.layer4", h);
}

// Random tiny configuration: every layer at most 8 wide.
inline ModelConfig tiny_config(std::mt19937_64& rng, Activation act) {
  ModelConfig c;
  c.pool_window = 2;
  for (auto& d : c.embed_dims) d = 2 * (1 + rng() % 4);
  c.hidden_dim = 2 + rng() % 7;
  c.k_stages = 1 + rng() % 3;
  for (auto& w : c.classifier_hidden) w = 2 + rng() % 7;
  c.n_classes = 2 + rng() % 4;
  c.activation = act;
  const char* variants[] = {"GSTE", "GS", "TE", "G", "GT", "SE", "GSTE"};
  c.modalities = ModalitySet::parse(variants[rng() % 7]);
  return c;
}

inline PairBatch random_batch(const ModelConfig& c, std::size_t rows, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  PairBatch b;
  for (std::size_t m = 0; m < 4; ++m) {
    b.a[m] = Matrix(rows, c.embed_dims[m]);
    b.b[m] = Matrix(rows, c.embed_dims[m]);
    for (double& v : b.a[m].data()) v = n(rng);
    for (double& v : b.b[m].data()) v = n(rng);
  }
  return b;
}

struct ModelGradReport {
  bool pass = true;
  double worst_rel = 0.0;
  std::size_t checked = 0;
  std::string detail;
};

// Objective sum(logits * R) for a fixed random R; every parameter and input
// entry is compared against a central difference with step h. An entry
// passes at relative error <= rel_tol or absolute error <= 1e-8.
inline ModelGradReport check_model_gradient(FusionModel& model, const PairBatch& batch,
                                            std::mt19937_64& rng, double h = 1e-6,
                                            double rel_tol = 1e-4) {
  const ForwardResult fwd = forward(model, batch);
  Matrix r(fwd.logits.rows(), fwd.logits.cols());
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : r.data()) v = n(rng);
  const Gradients g = backward(model, fwd.cache, r);

  auto objective = [&](const FusionModel& m, const PairBatch& b) {
    const Matrix z = forward(m, b).logits;
    double s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) s += z.data()[i] * r.data()[i];
    return s;
  };

  ModelGradReport rep;
  auto compare = [&](double analytic, double fd, const std::string& where) {
    ++rep.checked;
    const double abs_err = std::abs(analytic - fd);
    const double rel = oracle::rel_err(analytic, fd);
    if (std::max(std::abs(analytic), std::abs(fd)) > 1e-6) {
      rep.worst_rel = std::max(rep.worst_rel, rel);
    }
    if (rel > rel_tol && abs_err > 1e-8 && rep.pass) {
      rep.pass = false;
      std::ostringstream os;
      os << where << " analytic=" << analytic << " fd=" << fd;
      rep.detail = os.str();
    }
  };

  auto& params = model.parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& data = params[t].value.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + h;
      model.mark_updated();
      const double up = objective(model, batch);
      data[i] = orig - h;
      model.mark_updated();
      const double down = objective(model, batch);
      data[i] = orig;
      model.mark_updated();
      compare(g.params[t].data()[i], (up - down) / (2 * h),
              params[t].name + "[" + std::to_string(i) + "]");
    }
  }
  PairBatch probe = batch;
  for (int side = 0; side < 2; ++side) {
    for (std::size_t m = 0; m < 4; ++m) {
      if (!model.config().modalities.has(m)) continue;
      Matrix& x = side == 0 ? probe.a[m] : probe.b[m];
      const Matrix& gx = side == 0 ? g.inputs.a[m] : g.inputs.b[m];
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x.data()[i];
        x.data()[i] = orig + h;
        const double up = objective(model, probe);
        x.data()[i] = orig - h;
        const double down = objective(model, probe);
        x.data()[i] = orig;
        compare(gx.data()[i], (up - down) / (2 * h),
                std::string("input ") + (side ? "b" : "a") + std::to_string(m));
      }
    }
  }
  return rep;
}

}  // namespace tfmd::testing
