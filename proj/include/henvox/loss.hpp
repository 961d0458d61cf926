#pragma once

#include <array>

#include <Eigen/Dense>

#include "henvox/labels.hpp"

namespace hv {

inline constexpr double kProbClamp = 1e-7;

// How the top-k member logits of a master class are combined.
enum class MasterMixer { Mean, Max, LogSumExp };

struct LossWeights {
  std::array<double, kNumSubclasses> subclass{};  // alpha per subclass
  std::array<double, kNumMasters> master{};       // alpha per master class

  static LossWeights uniform(double alpha);
};

struct NestedLossOptions {
  double cbce_ratio = 0.1;  // weight of the subclass term
  MasterMixer mixer = MasterMixer::Mean;
  int top_k = 2;
};

double sigmoid(double x);

// Weighted binary cross-entropy: -(alpha*y*log(p) + (1-y)*log(1-p)), p clamped.
double cbce(double y, double p, double alpha);

// Derivative of cbce(y, sigmoid(z), alpha) with respect to z (0 where clamped).
double cbce_logit_grad(double y, double z, double alpha);

struct MasterLogits {
  std::array<double, kNumMasters> values{};
  // d(values[m]) / d(z[i]); zero for subclasses outside the selected top-k.
  std::array<std::array<double, kNumSubclasses>, kNumMasters> jacobian{};
};

MasterLogits master_logits(const Eigen::VectorXd& z, MasterMixer mixer = MasterMixer::Mean,
                           int top_k = 2);

struct NestedLoss {
  double total = 0.0;
  double subclass = 0.0;
  double master = 0.0;
  Eigen::VectorXd dlogits;  // d(total)/d(z)
};

NestedLoss nested_loss(const Eigen::VectorXd& z, const LabelVector& labels,
                       const LossWeights& weights, const NestedLossOptions& opts = {});

}  // namespace hv
