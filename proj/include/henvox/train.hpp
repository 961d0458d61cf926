#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "henvox/loss.hpp"
#include "henvox/metrics.hpp"
#include "henvox/model.hpp"

namespace hv {

enum class OptimizerKind { Adadelta, Adam, Sgd };
enum class AlphaMode { Fixed, ClassBalanced };

struct TrainConfig {
  int batch_size = 16;
  double cbce_ratio = 0.1;
  double dropout = 0.2;
  double learning_rate = 0.001;
  OptimizerKind optimizer = OptimizerKind::Adadelta;
  AlphaMode alpha_mode = AlphaMode::ClassBalanced;
  double alpha = 1.0;  // used when alpha_mode == Fixed
  MasterMixer mixer = MasterMixer::Mean;
  int epochs = 50;
  std::uint64_t seed = 0;
  double rho = 0.9;     // Adadelta decay
  double epsilon = 1e-6;

  void validate() const;
  NestedLossOptions loss_options() const { return {cbce_ratio, mixer, 2}; }
};

struct Sample {
  std::string id;
  ChannelInputs inputs;
  LabelVector label;
};

// Per-parameter accumulators, laid out like param_views(). For Adadelta
// `first` is the squared-gradient average and `second` the squared-update
// average; for Adam they are the first and second moment estimates.
struct OptimizerState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  long step = 0;
};

OptimizerState make_optimizer_state(const ModelParameters& params);

void adadelta_step(ModelParameters& params, const ModelParameters& grads, OptimizerState& state,
                   double lr, double rho = 0.9, double epsilon = 1e-6);
void adam_step(ModelParameters& params, const ModelParameters& grads, OptimizerState& state, double lr);
void sgd_step(ModelParameters& params, const ModelParameters& grads, double lr);

// Class-balanced alpha = #negatives / #positives per subclass and master class.
LossWeights class_balanced_weights(std::span<const Sample> data);
LossWeights resolve_weights(const TrainConfig& cfg, std::span<const Sample> data);

struct BatchGradient {
  ModelParameters grads;
  double loss = 0.0;
};

// Exact gradient of the mean nested loss over `batch`.
BatchGradient backward(const ModelParameters& params, std::span<const Sample* const> batch,
                       const LossWeights& weights, const NestedLossOptions& opts, Mode mode,
                       std::mt19937_64* rng = nullptr);

double batch_loss(const ModelParameters& params, std::span<const Sample* const> batch,
                  const LossWeights& weights, const NestedLossOptions& opts, Mode mode,
                  std::mt19937_64* rng = nullptr);

struct Prediction {
  Eigen::VectorXd logits;
  LabelMask labels = 0;
  int single = 0;  // argmax subclass
};

Prediction predict(const ModelParameters& params, const ChannelInputs& inputs);
double evaluate_f1(const ModelParameters& params, std::span<const Sample> data);
EvalReport evaluate(const ModelParameters& params, std::span<const Sample> data);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_sample_f1 = 0.0;
};

struct TrainResult {
  ModelParameters params;  // best validation F1 (earliest epoch on ties)
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

// Validates on `val` when non-empty, otherwise on the training set itself.
TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val,
                  const TrainConfig& cfg, ModelConfig model_cfg);

std::string format_history(const std::vector<EpochRecord>& history);
void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace hv
