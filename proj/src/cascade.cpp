#include "henvox/cascade.hpp"

#include <cmath>

#include "henvox/error.hpp"
#include "henvox/loss.hpp"

namespace hv {

double BinaryGmm::probability(const Eigen::VectorXd& x) const {
  return sigmoid(positive.log_likelihood(x) - negative.log_likelihood(x) + log_prior_ratio);
}

CascadeEnsemble cascade_train(std::span<const Eigen::VectorXd> vectors, std::span<const LabelVector> labels,
                              const CascadeOptions& opts, std::span<const Eigen::VectorXd> val_vectors,
                              std::span<const LabelVector> val_labels) {
  if (vectors.size() != labels.size() || val_vectors.size() != val_labels.size()) {
    throw Error(ErrorKind::LengthMismatch, "vectors vs labels");
  }
  const bool own_val = val_vectors.empty();
  const auto vv = own_val ? vectors : val_vectors;
  const auto vl = own_val ? labels : val_labels;

  CascadeEnsemble ens;
  ens.rule = opts.rule;
  double weight_sum = 0.0;
  for (int c = 0; c < kNumSubclasses; ++c) {
    std::vector<Eigen::VectorXd> pos, neg;
    for (std::size_t i = 0; i < vectors.size(); ++i) (labels[i].sub(c) ? pos : neg).push_back(vectors[i]);
    if (pos.empty() || neg.empty()) {
      throw Error(ErrorKind::MissingClassSamples,
                  std::string(subclass_token(c)) + " needs positive and negative samples");
    }
    GmmOptions o = opts.gmm;
    o.seed = opts.gmm.seed + 2 * static_cast<std::uint64_t>(c);
    BinaryGmm m;
    o.components = std::min<int>(opts.gmm.components, static_cast<int>(pos.size()));
    m.positive = gmm_fit(pos, o).model;
    o.seed += 1;
    o.components = std::min<int>(opts.gmm.components, static_cast<int>(neg.size()));
    m.negative = gmm_fit(neg, o).model;
    m.log_prior_ratio = std::log(static_cast<double>(pos.size()) / static_cast<double>(neg.size()));

    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < vv.size(); ++i) {
      const bool p = m.probability(vv[i]) > 0.5;
      const bool t = vl[i].sub(c);
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const long denom = 2 * tp + fp + fn;
    const double f1 = denom == 0 ? 0.0 : 2.0 * tp / static_cast<double>(denom);
    ens.weights[static_cast<std::size_t>(c)] = f1;
    weight_sum += f1;
    ens.models.push_back(std::move(m));
  }
  for (double& w : ens.weights) w = weight_sum > 0.0 ? w / weight_sum : 1.0 / kNumSubclasses;
  return ens;
}

CascadePrediction cascade_decide(const std::array<double, kNumSubclasses>& probs,
                                 const std::array<double, kNumSubclasses>& weights, CascadeRule rule) {
  CascadePrediction out;
  out.probabilities = probs;
  if (rule == CascadeRule::WeightedInterpolation) {
    std::array<double, kNumSubclasses> scored{};
    for (std::size_t i = 0; i < scored.size(); ++i) scored[i] = weights[i] * probs[i];
    out.label = argmax_lowest(scored);
    return out;
  }
  // Each one-vs-rest model can only vote for its own class, so every voter
  // holds one vote and the tie goes to the most confident voter. Without
  // voters the most confident model decides.
  int best = -1;
  for (int i = 0; i < kNumSubclasses; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (probs[iu] > 0.5 && (best < 0 || probs[iu] > probs[static_cast<std::size_t>(best)])) best = i;
  }
  out.label = best >= 0 ? best : argmax_lowest(probs);
  return out;
}

CascadePrediction cascade_predict(const CascadeEnsemble& ens, const Eigen::VectorXd& x) {
  if (!ens.fitted()) throw Error(ErrorKind::NotFitted, "cascade has not been trained");
  std::array<double, kNumSubclasses> probs{};
  for (int i = 0; i < kNumSubclasses; ++i) {
    probs[static_cast<std::size_t>(i)] = ens.models[static_cast<std::size_t>(i)].probability(x);
  }
  return cascade_decide(probs, ens.weights, ens.rule);
}

Checkpoint CascadeEnsemble::to_checkpoint() const {
  if (!fitted()) throw Error(ErrorKind::NotFitted, "cascade has not been trained");
  Checkpoint ck;
  ck.config["kind"] = "cascade";
  ck.config["rule"] = rule == CascadeRule::MajorityVote ? "majority_vote" : "weighted_interpolation";
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string p = "model" + std::to_string(i);
    append_mixture(ck, p + ".pos", models[i].positive);
    append_mixture(ck, p + ".neg", models[i].negative);
    ck.arrays.push_back({p + ".log_prior_ratio", {1}, {models[i].log_prior_ratio}});
  }
  ck.arrays.push_back({"weights", {kNumSubclasses}, {weights.begin(), weights.end()}});
  return ck;
}

CascadeEnsemble CascadeEnsemble::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.value("kind") != "cascade") throw Error(ErrorKind::BadFormat, "checkpoint is not a cascade");
  CascadeEnsemble e;
  e.rule = ckpt.value("rule") == "majority_vote" ? CascadeRule::MajorityVote : CascadeRule::WeightedInterpolation;
  for (int i = 0; i < kNumSubclasses; ++i) {
    const std::string p = "model" + std::to_string(i);
    BinaryGmm m;
    m.positive = read_mixture(ckpt, p + ".pos");
    m.negative = read_mixture(ckpt, p + ".neg");
    m.log_prior_ratio = ckpt.array(p + ".log_prior_ratio").data.at(0);
    e.models.push_back(std::move(m));
  }
  const auto& w = ckpt.array("weights").data;
  if (w.size() != kNumSubclasses) throw Error(ErrorKind::BadFormat, "cascade weights");
  std::copy(w.begin(), w.end(), e.weights.begin());
  return e;
}

}  // namespace hv
