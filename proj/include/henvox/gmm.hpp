#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "henvox/audio_io.hpp"
#include "henvox/checkpoint.hpp"
#include "henvox/labels.hpp"

namespace hv {

inline constexpr double kVarianceFloor = 1e-6;

struct GmmOptions {
  int components = 4;
  int max_iterations = 200;
  double tolerance = 1e-6;  // stop when the total log-likelihood gain falls below this
  std::uint64_t seed = 0;
};

// Mixture of diagonal-covariance Gaussians.
struct DiagonalGmm {
  Eigen::VectorXd weights;  // K, sums to 1
  RowMatrix means;          // K x D
  RowMatrix variances;      // K x D, floored at kVarianceFloor

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
  double log_likelihood(const Eigen::VectorXd& x) const;
};

struct GmmFit {
  DiagonalGmm model;
  std::vector<double> log_likelihood;  // total data log-likelihood after each EM iteration
  int iterations = 0;
};

// k-means++ seeding followed by expectation-maximization.
GmmFit gmm_fit(std::span<const Eigen::VectorXd> data, const GmmOptions& opts);

struct GmmPrediction {
  std::array<double, kNumSubclasses> log_likelihoods{};
  int label = 0;  // argmax; ties resolve to the lowest class index
};

class GmmClassifier {
 public:
  // A sample contributes to the mixture of every subclass it carries.
  void fit(std::span<const Eigen::VectorXd> vectors, std::span<const LabelVector> labels,
           const GmmOptions& opts);
  GmmPrediction predict(const Eigen::VectorXd& x) const;
  bool fitted() const { return !classes_.empty(); }

  const std::vector<DiagonalGmm>& classes() const { return classes_; }
  const std::vector<GmmFit>& fits() const { return fits_; }

  Checkpoint to_checkpoint() const;
  static GmmClassifier from_checkpoint(const Checkpoint& ckpt);

 private:
  std::vector<DiagonalGmm> classes_;
  std::vector<GmmFit> fits_;
};

// argmax with lowest-index tie breaking, shared by the baselines.
int argmax_lowest(std::span<const double> values);

void append_mixture(Checkpoint& ckpt, const std::string& prefix, const DiagonalGmm& g);
DiagonalGmm read_mixture(const Checkpoint& ckpt, const std::string& prefix);

}  // namespace hv
