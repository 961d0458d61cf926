#include "henvox/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "henvox/error.hpp"

namespace hv {

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  if (!(cbce_ratio >= 0.0 && cbce_ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "cbce_ratio must lie in [0, 1]");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::InvalidConfig, "dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidConfig, "alpha must be positive");
  if (epochs < 0) throw Error(ErrorKind::InvalidConfig, "epochs must be >= 0");
}

OptimizerState make_optimizer_state(const ModelParameters& params) {
  OptimizerState s;
  auto& p = const_cast<ModelParameters&>(params);
  for (const auto& v : param_views(p)) {
    s.first.emplace_back(v.values.size(), 0.0);
    s.second.emplace_back(v.values.size(), 0.0);
  }
  return s;
}

void adadelta_step(ModelParameters& params, const ModelParameters& grads, OptimizerState& state,
                   double lr, double rho, double epsilon) {
  auto pv = param_views(params);
  auto gv = param_views(const_cast<ModelParameters&>(grads));
  for (std::size_t a = 0; a < pv.size(); ++a) {
    if (!pv[a].trainable) continue;
    auto& sg = state.first[a];
    auto& su = state.second[a];
    for (std::size_t i = 0; i < pv[a].values.size(); ++i) {
      const double g = gv[a].values[i];
      sg[i] = rho * sg[i] + (1.0 - rho) * g * g;
      const double delta = -std::sqrt(su[i] + epsilon) / std::sqrt(sg[i] + epsilon) * g;
      su[i] = rho * su[i] + (1.0 - rho) * delta * delta;
      pv[a].values[i] += lr * delta;
    }
  }
  ++state.step;
}

void adam_step(ModelParameters& params, const ModelParameters& grads, OptimizerState& state, double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  auto pv = param_views(params);
  auto gv = param_views(const_cast<ModelParameters&>(grads));
  for (std::size_t a = 0; a < pv.size(); ++a) {
    if (!pv[a].trainable) continue;
    auto& m = state.first[a];
    auto& v = state.second[a];
    for (std::size_t i = 0; i < pv[a].values.size(); ++i) {
      const double g = gv[a].values[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      pv[a].values[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

void sgd_step(ModelParameters& params, const ModelParameters& grads, double lr) {
  auto pv = param_views(params);
  auto gv = param_views(const_cast<ModelParameters&>(grads));
  for (std::size_t a = 0; a < pv.size(); ++a) {
    if (!pv[a].trainable) continue;
    for (std::size_t i = 0; i < pv[a].values.size(); ++i) pv[a].values[i] -= lr * gv[a].values[i];
  }
}

LossWeights class_balanced_weights(std::span<const Sample> data) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "no training samples");
  std::array<long, kNumSubclasses> sub_pos{};
  std::array<long, kNumMasters> master_pos{};
  for (const auto& s : data) {
    for (int i = 0; i < kNumSubclasses; ++i) sub_pos[static_cast<std::size_t>(i)] += s.label.sub(i);
    for (int m = 0; m < kNumMasters; ++m) master_pos[static_cast<std::size_t>(m)] += s.label.master(m);
  }
  const auto n = static_cast<long>(data.size());
  auto ratio = [n](long pos, std::string_view name) {
    if (pos == 0) {
      throw Error(ErrorKind::DegenerateLabels, std::string(name) + " has no positive training samples");
    }
    // A class present in every sample has no negatives; keep alpha positive.
    return static_cast<double>(std::max(n - pos, 1L)) / static_cast<double>(pos);
  };
  LossWeights w;
  for (int i = 0; i < kNumSubclasses; ++i) {
    w.subclass[static_cast<std::size_t>(i)] = ratio(sub_pos[static_cast<std::size_t>(i)], subclass_token(i));
  }
  for (int m = 0; m < kNumMasters; ++m) {
    w.master[static_cast<std::size_t>(m)] = ratio(master_pos[static_cast<std::size_t>(m)], master_name(m));
  }
  return w;
}

LossWeights resolve_weights(const TrainConfig& cfg, std::span<const Sample> data) {
  return cfg.alpha_mode == AlphaMode::Fixed ? LossWeights::uniform(cfg.alpha)
                                            : class_balanced_weights(data);
}

BatchGradient backward(const ModelParameters& params, std::span<const Sample* const> batch,
                       const LossWeights& weights, const NestedLossOptions& opts, Mode mode,
                       std::mt19937_64* rng) {
  if (batch.empty()) throw Error(ErrorKind::EmptyDataset, "empty batch");
  BatchGradient out{params.zeros_like(), 0.0};
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Sample* s : batch) {
    const auto tr = forward(params, s->inputs, mode, rng);
    const auto loss = nested_loss(tr.logits, s->label, weights, opts);
    out.loss += loss.total * scale;
    accumulate_gradients(params, tr, loss.dlogits * scale, out.grads);
  }
  return out;
}

double batch_loss(const ModelParameters& params, std::span<const Sample* const> batch,
                  const LossWeights& weights, const NestedLossOptions& opts, Mode mode,
                  std::mt19937_64* rng) {
  double total = 0.0;
  for (const Sample* s : batch) {
    total += nested_loss(forward(params, s->inputs, mode, rng).logits, s->label, weights, opts).total;
  }
  return total / static_cast<double>(batch.size());
}

Prediction predict(const ModelParameters& params, const ChannelInputs& inputs) {
  Prediction p;
  p.logits = forward(params, inputs, Mode::Eval).logits;
  p.labels = decide_labels(p.logits);
  Eigen::Index best = 0;
  p.logits.maxCoeff(&best);
  p.single = static_cast<int>(best);
  return p;
}

EvalReport evaluate(const ModelParameters& params, std::span<const Sample> data) {
  std::vector<LabelMask> preds, truths;
  std::vector<int> pred_single, true_single;
  for (const auto& s : data) {
    const auto p = predict(params, s.inputs);
    preds.push_back(p.labels);
    truths.push_back(s.label.mask());
    pred_single.push_back(p.single);
    true_single.push_back(s.label.primary());
  }
  return evaluate_predictions(preds, truths, pred_single, true_single);
}

double evaluate_f1(const ModelParameters& params, std::span<const Sample> data) {
  std::vector<LabelMask> preds, truths;
  for (const auto& s : data) {
    preds.push_back(predict(params, s.inputs).labels);
    truths.push_back(s.label.mask());
  }
  return sample_f1(preds, truths);
}

TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val,
                  const TrainConfig& cfg, ModelConfig model_cfg) {
  cfg.validate();
  if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "no training samples");
  model_cfg.dropout = cfg.dropout;
  ModelParameters params = init_params(model_cfg);
  std::vector<ChannelInputs> inputs;
  inputs.reserve(train_set.size());
  for (const auto& s : train_set) inputs.push_back(s.inputs);
  fit_normalization(params, inputs);

  const LossWeights weights = resolve_weights(cfg, train_set);
  const NestedLossOptions opts = cfg.loss_options();
  const std::span<const Sample> val_set = val.empty() ? train_set : val;

  OptimizerState state = make_optimizer_state(params);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.params = params;
  double best_f1 = -1.0;
  std::vector<const Sample*> batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_set[order[i]]);
      const auto g = backward(params, batch, weights, opts, Mode::Train, &rng);
      loss_sum += g.loss * static_cast<double>(batch.size());
      switch (cfg.optimizer) {
        case OptimizerKind::Adadelta:
          adadelta_step(params, g.grads, state, cfg.learning_rate, cfg.rho, cfg.epsilon);
          break;
        case OptimizerKind::Adam:
          adam_step(params, g.grads, state, cfg.learning_rate);
          break;
        case OptimizerKind::Sgd:
          sgd_step(params, g.grads, cfg.learning_rate);
          break;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_sample_f1 = evaluate_f1(params, val_set);
    result.history.push_back(rec);
    if (rec.val_sample_f1 > best_f1) {
      best_f1 = rec.val_sample_f1;
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

std::string format_history(const std::vector<EpochRecord>& history) {
  std::string out;
  char buf[128];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\n", r.epoch, r.train_loss, r.val_sample_f1);
    out += buf;
  }
  return out;
}

void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << format_history(history);
}

}  // namespace hv
