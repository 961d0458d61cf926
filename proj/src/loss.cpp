#include "henvox/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "henvox/error.hpp"

namespace hv {

LossWeights LossWeights::uniform(double alpha) {
  LossWeights w;
  w.subclass.fill(alpha);
  w.master.fill(alpha);
  return w;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double cbce(double y, double p, double alpha) {
  const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(alpha * y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

double cbce_logit_grad(double y, double z, double alpha) {
  const double p = sigmoid(z);
  if (p <= kProbClamp || p >= 1.0 - kProbClamp) return 0.0;
  return (1.0 - y) * p - alpha * y * (1.0 - p);
}

MasterLogits master_logits(const Eigen::VectorXd& z, MasterMixer mixer, int top_k) {
  if (z.size() != kNumSubclasses) throw Error(ErrorKind::DimMismatch, "expected 8 logits");
  MasterLogits out;
  for (int m = 0; m < kNumMasters; ++m) {
    auto members = members_of(m);
    // Ties resolve to the lower subclass index so the selection is deterministic.
    std::stable_sort(members.begin(), members.end(), [&](int a, int b) { return z(a) > z(b); });
    const auto k = static_cast<std::size_t>(std::min<int>(top_k, static_cast<int>(members.size())));
    auto& row = out.jacobian[static_cast<std::size_t>(m)];
    double value = 0.0;
    switch (mixer) {
      case MasterMixer::Mean:
        for (std::size_t j = 0; j < k; ++j) {
          value += z(members[j]);
          row[static_cast<std::size_t>(members[j])] = 1.0 / static_cast<double>(k);
        }
        value /= static_cast<double>(k);
        break;
      case MasterMixer::Max:
        value = z(members[0]);
        row[static_cast<std::size_t>(members[0])] = 1.0;
        break;
      case MasterMixer::LogSumExp: {
        const double mx = z(members[0]);
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += std::exp(z(members[j]) - mx);
        value = mx + std::log(s);
        for (std::size_t j = 0; j < k; ++j) {
          row[static_cast<std::size_t>(members[j])] = std::exp(z(members[j]) - mx) / s;
        }
        break;
      }
    }
    out.values[static_cast<std::size_t>(m)] = value;
  }
  return out;
}

NestedLoss nested_loss(const Eigen::VectorXd& z, const LabelVector& labels,
                       const LossWeights& weights, const NestedLossOptions& opts) {
  const double r = opts.cbce_ratio;
  NestedLoss out;
  out.dlogits = Eigen::VectorXd::Zero(kNumSubclasses);

  for (int i = 0; i < kNumSubclasses; ++i) {
    const double y = labels.sub(i) ? 1.0 : 0.0;
    const double a = weights.subclass[static_cast<std::size_t>(i)];
    out.subclass += cbce(y, sigmoid(z(i)), a);
    out.dlogits(i) += r * cbce_logit_grad(y, z(i), a) / kNumSubclasses;
  }
  out.subclass /= kNumSubclasses;

  const auto ml = master_logits(z, opts.mixer, opts.top_k);
  for (int m = 0; m < kNumMasters; ++m) {
    const double y = labels.master(m) ? 1.0 : 0.0;
    const double a = weights.master[static_cast<std::size_t>(m)];
    const double g = ml.values[static_cast<std::size_t>(m)];
    out.master += cbce(y, sigmoid(g), a);
    const double dg = (1.0 - r) * cbce_logit_grad(y, g, a) / kNumMasters;
    for (int i = 0; i < kNumSubclasses; ++i) {
      out.dlogits(i) += dg * ml.jacobian[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)];
    }
  }
  out.master /= kNumMasters;
  out.total = (1.0 - r) * out.master + r * out.subclass;
  return out;
}

}  // namespace hv
