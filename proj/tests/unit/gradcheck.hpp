#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "henvox/loss.hpp"
#include "henvox/model.hpp"
#include "henvox/train.hpp"

namespace test {

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

inline hv::FeatureMatrix random_sequence(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<float> d(0.0f, 1.0f);
  return hv::FeatureMatrix::NullaryExpr(rows, cols, [&] { return d(rng); });
}

inline std::vector<hv::Sample> random_samples(std::mt19937_64& rng, const hv::ModelConfig& cfg, int count,
                                              int max_steps) {
  std::uniform_int_distribution<int> steps(1, max_steps);
  std::uniform_int_distribution<int> cls(0, hv::kNumSubclasses - 1);
  std::vector<hv::Sample> out;
  for (int s = 0; s < count; ++s) {
    hv::Sample smp;
    smp.id = "s" + std::to_string(s);
    for (int d : cfg.channel_input_dims) smp.inputs.push_back(random_sequence(rng, steps(rng), d));
    std::vector<int> labels{cls(rng)};
    if (s % 2 == 1) labels.push_back(cls(rng));
    smp.label = hv::LabelVector::from_indices(labels);
    out.push_back(std::move(smp));
  }
  return out;
}

// Central finite differences of the mean nested loss against backward(), on a tiny
// model whose every trainable entry is randomized so no term is trivially zero.
// The relative error uses max(|analytic|, |numeric|, floor) as denominator.
inline GradCheck gradient_check(std::uint64_t seed, int max_steps = 4, double step = 1e-3, double floor = 1e-7) {
  std::mt19937_64 rng(seed);
  hv::ModelConfig cfg;
  cfg.hidden_size = 8;
  cfg.boom_dim = 16;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  cfg.num_layers = seed % 4 == 3 ? 2 : 1;
  hv::ModelParameters params = hv::init_params(cfg);
  std::normal_distribution<double> w(0.0, 0.4);
  for (auto& v : hv::param_views(params)) {
    if (v.trainable) {
      for (double& x : v.values) x = w(rng);
    }
  }
  const auto samples = random_samples(rng, cfg, 3, max_steps);
  std::vector<hv::ChannelInputs> inputs;
  for (const auto& s : samples) inputs.push_back(s.inputs);
  hv::fit_normalization(params, inputs);

  hv::LossWeights weights;
  std::uniform_real_distribution<double> a(0.5, 3.0);
  for (auto& x : weights.subclass) x = a(rng);
  for (auto& x : weights.master) x = a(rng);
  hv::NestedLossOptions opts;
  opts.cbce_ratio = 0.3;
  opts.mixer = static_cast<hv::MasterMixer>(seed % 3);

  std::vector<const hv::Sample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  auto grads = hv::backward(params, batch, weights, opts, hv::Mode::Eval).grads;

  GradCheck out;
  auto pv = hv::param_views(params);
  auto gv = hv::param_views(grads);
  for (std::size_t k = 0; k < pv.size(); ++k) {
    if (!pv[k].trainable) continue;
    for (std::size_t i = 0; i < pv[k].values.size(); ++i) {
      double& x = pv[k].values[i];
      const double keep = x;
      auto at = [&](double offset) {
        x = keep + offset;
        return hv::batch_loss(params, batch, weights, opts, hv::Mode::Eval);
      };
      // fourth-order central stencil
      const double numeric =
          (at(-2 * step) - 8.0 * at(-step) + 8.0 * at(step) - at(2 * step)) / (12.0 * step);
      x = keep;
      const double analytic = gv[k].values[i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      if (rel > out.max_rel) {
        out.max_rel = rel;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s[%zu] analytic %.6e numeric %.6e", pv[k].name.c_str(), i, analytic,
                      numeric);
        out.worst = buf;
      }
      ++out.checked;
    }
  }
  return out;
}

}  // namespace test
