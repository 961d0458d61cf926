#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "henvox/audio_io.hpp"
#include "henvox/checkpoint.hpp"
#include "henvox/features.hpp"

namespace hv {

struct ModelConfig {
  int hidden_size = 1024;
  int boom_dim = 512;
  int num_classes = 8;
  double dropout = 0.2;
  std::vector<int> channel_input_dims = {kTimeFeatureDim, kSpectralFeatureDim, 2 * kCepstralDim};
  int attention_dim = 0;  // keys are raw hidden states, so 0 means hidden_size
  int num_layers = 1;
  std::uint64_t seed = 0;

  void validate() const;
  int num_channels() const { return static_cast<int>(channel_input_dims.size()); }
  int context_dim() const { return hidden_size * num_channels(); }

  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

struct LstmLayer {
  RowMatrix w_input;      // in x 4H, gate order [input, forget, cell, output]
  RowMatrix w_recurrent;  // H x 4H
  Eigen::VectorXd bias;   // 4H
};

struct ChannelParams {
  RowMatrix proj;               // d x H feature layer
  Eigen::VectorXd proj_bias;    // H
  std::vector<LstmLayer> layers;
  RowMatrix query;              // H x H
  Eigen::VectorXd norm_mean;    // d, fixed from the training split
  Eigen::VectorXd norm_scale;   // d, reciprocal standard deviation
};

struct ModelParameters {
  ModelConfig config;
  std::vector<ChannelParams> channels;
  RowMatrix boom_up;             // context_dim x boom_dim
  Eigen::VectorXd boom_up_bias;  // boom_dim
  RowMatrix boom_down;           // boom_dim x num_classes
  Eigen::VectorXd boom_down_bias;

  ModelParameters zeros_like() const;
};

// Mutable view of one stored array, in a fixed deterministic order.
struct ParamView {
  std::string name;
  std::span<double> values;
  std::vector<std::uint32_t> dims;
  bool trainable = true;
};

std::vector<ParamView> param_views(ModelParameters& params);
std::size_t trainable_count(const ModelParameters& params);

enum class Mode { Train, Eval };

using ChannelInputs = std::vector<FeatureMatrix>;

ModelParameters init_params(const ModelConfig& cfg);

// Fits the per-channel input normalization on a training set.
void fit_normalization(ModelParameters& params, std::span<const ChannelInputs> data);

struct AttentionResult {
  Eigen::VectorXd context;
  Eigen::VectorXd weights;
};

// Single-head attention with the last state as query; only the query is projected.
AttentionResult sha_attention(const RowMatrix& hidden, const RowMatrix& query_proj);

// Gaussian error linear unit (erf form) and its derivative.
double gelu(double x);
double gelu_grad(double x);

// Retained activations for one channel.
struct ChannelCache {
  RowMatrix input;       // normalized T x d
  RowMatrix projected;   // after dropout, T x H
  RowMatrix proj_mask;   // empty in eval mode
  struct Layer {
    RowMatrix in, i, f, g, o, c, tanh_c, h;
  };
  std::vector<Layer> layers;
  Eigen::VectorXd query;
  Eigen::VectorXd weights;
  Eigen::VectorXd context;  // after dropout
  Eigen::VectorXd context_mask;
};

struct ForwardTrace {
  Eigen::VectorXd logits;
  std::vector<Eigen::VectorXd> attention_weights;
  std::vector<ChannelCache> channels;
  Eigen::VectorXd boom_input;
  Eigen::VectorXd boom_pre;
  Eigen::VectorXd boom_act;
};

// `rng` is required in train mode with dropout > 0.
RowMatrix encode_channel(const ModelParameters& params, const FeatureMatrix& sequence, int channel,
                         Mode mode, std::mt19937_64* rng = nullptr);

Eigen::VectorXd boom(const ModelParameters& params, const Eigen::VectorXd& v);

ForwardTrace forward(const ModelParameters& params, const ChannelInputs& inputs, Mode mode,
                     std::mt19937_64* rng = nullptr);

// Adds d(loss)/d(params) for one sample to `grads` given d(loss)/d(logits).
void accumulate_gradients(const ModelParameters& params, const ForwardTrace& trace,
                          const Eigen::VectorXd& dlogits, ModelParameters& grads);

Checkpoint to_checkpoint(const ModelParameters& params);
ModelParameters from_checkpoint(const Checkpoint& ckpt);
void save_model(const std::filesystem::path& path, const ModelParameters& params);
ModelParameters load_model(const std::filesystem::path& path);

}  // namespace hv
