#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "henvox/checkpoint.hpp"
#include "henvox/gmm.hpp"
#include "henvox/labels.hpp"

namespace hv {

enum class CascadeRule { MajorityVote, WeightedInterpolation };

// One-vs-rest binary model: a mixture for the positives, one for the
// negatives, and the class prior. p = sigmoid(llr + log prior ratio).
struct BinaryGmm {
  DiagonalGmm positive;
  DiagonalGmm negative;
  double log_prior_ratio = 0.0;

  double probability(const Eigen::VectorXd& x) const;
};

struct CascadeOptions {
  GmmOptions gmm{2, 200, 1e-6, 0};
  CascadeRule rule = CascadeRule::MajorityVote;
};

struct CascadePrediction {
  int label = 0;
  std::array<double, kNumSubclasses> probabilities{};
};

struct CascadeEnsemble {
  std::vector<BinaryGmm> models;               // one per subclass, in subclass order
  std::array<double, kNumSubclasses> weights{};  // validation-F1 weights, sum to 1
  CascadeRule rule = CascadeRule::MajorityVote;

  bool fitted() const { return models.size() == kNumSubclasses; }
  Checkpoint to_checkpoint() const;
  static CascadeEnsemble from_checkpoint(const Checkpoint& ckpt);
};

// Trains the 8 one-vs-rest models. Interpolation weights come from each
// model's binary F1 (threshold 0.5) on `val`, or on the training data when
// `val` is empty.
CascadeEnsemble cascade_train(std::span<const Eigen::VectorXd> vectors, std::span<const LabelVector> labels,
                              const CascadeOptions& opts,
                              std::span<const Eigen::VectorXd> val_vectors = {},
                              std::span<const LabelVector> val_labels = {});

// Combines per-model probabilities under a decision rule.
CascadePrediction cascade_decide(const std::array<double, kNumSubclasses>& probabilities,
                                 const std::array<double, kNumSubclasses>& weights, CascadeRule rule);

CascadePrediction cascade_predict(const CascadeEnsemble& ensemble, const Eigen::VectorXd& x);

}  // namespace hv
