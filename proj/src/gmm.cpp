#include "henvox/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "henvox/error.hpp"

namespace hv {

namespace {

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// log N(x | mean_k, diag var_k) + log w_k for every component.
void component_log_densities(const DiagonalGmm& g, const Eigen::VectorXd& x, std::vector<double>& out) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  out.resize(static_cast<std::size_t>(g.components()));
  for (int k = 0; k < g.components(); ++k) {
    double acc = 0.0;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      const double var = g.variances(k, d);
      const double diff = x(d) - g.means(k, d);
      acc += log2pi + std::log(var) + diff * diff / var;
    }
    out[static_cast<std::size_t>(k)] = std::log(g.weights(k)) - 0.5 * acc;
  }
}

}  // namespace

double DiagonalGmm::log_likelihood(const Eigen::VectorXd& x) const {
  if (x.size() != means.cols()) throw Error(ErrorKind::DimMismatch, "GMM input dimension");
  std::vector<double> comp;
  component_log_densities(*this, x, comp);
  return log_sum_exp(comp);
}

GmmFit gmm_fit(std::span<const Eigen::VectorXd> data, const GmmOptions& opts) {
  const int k_count = opts.components;
  if (k_count < 1) throw Error(ErrorKind::InvalidConfig, "need at least one component");
  if (data.size() < static_cast<std::size_t>(k_count)) {
    throw Error(ErrorKind::TooFewSamples, std::to_string(data.size()) + " vectors for " +
                                              std::to_string(k_count) + " components");
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index dim = data[0].size();
  for (const auto& x : data) {
    if (x.size() != dim) throw Error(ErrorKind::DimMismatch, "GMM vectors differ in length");
    if (!x.allFinite()) throw Error(ErrorKind::InvalidConfig, "GMM input contains non-finite values");
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& x : data) mean += x;
  mean /= static_cast<double>(n);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& x : data) var += (x - mean).cwiseAbs2();
  var = (var / static_cast<double>(n)).cwiseMax(kVarianceFloor);

  // k-means++ seeding of the component means.
  std::mt19937_64 rng(opts.seed);
  std::vector<Eigen::Index> centres;
  centres.push_back(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centres.size()) < k_count) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (data[static_cast<std::size_t>(i)] - data[static_cast<std::size_t>(centres.back())]).squaredNorm();
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], d);
      total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2[static_cast<std::size_t>(i)];
        if (u <= 0.0) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    }
    centres.push_back(pick);
  }

  GmmFit fit;
  DiagonalGmm& g = fit.model;
  g.weights = Eigen::VectorXd::Constant(k_count, 1.0 / k_count);
  g.means.resize(k_count, dim);
  g.variances.resize(k_count, dim);
  for (int k = 0; k < k_count; ++k) {
    g.means.row(k) = data[static_cast<std::size_t>(centres[static_cast<std::size_t>(k)])].transpose();
    g.variances.row(k) = var.transpose();
  }

  RowMatrix resp(n, k_count);
  std::vector<double> comp;
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // E-step
    for (Eigen::Index i = 0; i < n; ++i) {
      component_log_densities(g, data[static_cast<std::size_t>(i)], comp);
      const double lse = log_sum_exp(comp);
      for (int k = 0; k < k_count; ++k) resp(i, k) = std::exp(comp[static_cast<std::size_t>(k)] - lse);
    }
    // M-step; a component that lost all responsibility keeps its shape with zero weight.
    for (int k = 0; k < k_count; ++k) {
      const double nk = resp.col(k).sum();
      g.weights(k) = nk / static_cast<double>(n);
      if (nk <= 1e-12) continue;
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim);
      for (Eigen::Index i = 0; i < n; ++i) mu += resp(i, k) * data[static_cast<std::size_t>(i)];
      mu /= nk;
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      for (Eigen::Index i = 0; i < n; ++i) v += resp(i, k) * (data[static_cast<std::size_t>(i)] - mu).cwiseAbs2();
      g.means.row(k) = mu.transpose();
      g.variances.row(k) = (v / nk).cwiseMax(kVarianceFloor).transpose();
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += g.log_likelihood(data[static_cast<std::size_t>(i)]);
    fit.log_likelihood.push_back(ll);
    fit.iterations = iter + 1;
    if (ll - prev_ll < opts.tolerance) break;
    prev_ll = ll;
  }
  return fit;
}

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void GmmClassifier::fit(std::span<const Eigen::VectorXd> vectors, std::span<const LabelVector> labels,
                        const GmmOptions& opts) {
  if (vectors.size() != labels.size()) throw Error(ErrorKind::LengthMismatch, "vectors vs labels");
  std::array<std::vector<Eigen::VectorXd>, kNumSubclasses> per_class;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (int c : labels[i].indices()) per_class[static_cast<std::size_t>(c)].push_back(vectors[i]);
  }
  classes_.clear();
  fits_.clear();
  for (int c = 0; c < kNumSubclasses; ++c) {
    GmmOptions o = opts;
    const auto& xs = per_class[static_cast<std::size_t>(c)];
    o.seed = opts.seed + static_cast<std::uint64_t>(c);
    // small classes get as many components as they have samples
    if (!xs.empty()) o.components = std::min<int>(opts.components, static_cast<int>(xs.size()));
    auto f = gmm_fit(xs, o);
    classes_.push_back(f.model);
    fits_.push_back(std::move(f));
  }
}

GmmPrediction GmmClassifier::predict(const Eigen::VectorXd& x) const {
  if (!fitted()) throw Error(ErrorKind::NotFitted, "GMM classifier has not been fitted");
  GmmPrediction p;
  for (int c = 0; c < kNumSubclasses; ++c) {
    p.log_likelihoods[static_cast<std::size_t>(c)] = classes_[static_cast<std::size_t>(c)].log_likelihood(x);
  }
  p.label = argmax_lowest(p.log_likelihoods);
  return p;
}

void append_mixture(Checkpoint& ckpt, const std::string& prefix, const DiagonalGmm& g) {
  const auto k = static_cast<std::uint32_t>(g.components());
  const auto d = static_cast<std::uint32_t>(g.dim());
  ckpt.arrays.push_back({prefix + ".weights", {k}, {g.weights.data(), g.weights.data() + k}});
  ckpt.arrays.push_back({prefix + ".means", {k, d}, {g.means.data(), g.means.data() + g.means.size()}});
  ckpt.arrays.push_back(
      {prefix + ".variances", {k, d}, {g.variances.data(), g.variances.data() + g.variances.size()}});
}

DiagonalGmm read_mixture(const Checkpoint& ckpt, const std::string& prefix) {
  const auto& w = ckpt.array(prefix + ".weights");
  const auto& m = ckpt.array(prefix + ".means");
  const auto& v = ckpt.array(prefix + ".variances");
  if (w.dims.size() != 1 || m.dims.size() != 2 || v.dims != m.dims || m.dims[0] != w.dims[0]) {
    throw Error(ErrorKind::BadFormat, "inconsistent mixture shapes for " + prefix);
  }
  DiagonalGmm g;
  g.weights = Eigen::Map<const Eigen::VectorXd>(w.data.data(), w.dims[0]);
  g.means = Eigen::Map<const RowMatrix>(m.data.data(), m.dims[0], m.dims[1]);
  g.variances = Eigen::Map<const RowMatrix>(v.data.data(), v.dims[0], v.dims[1]);
  return g;
}

Checkpoint GmmClassifier::to_checkpoint() const {
  if (!fitted()) throw Error(ErrorKind::NotFitted, "GMM classifier has not been fitted");
  Checkpoint ck;
  ck.config["kind"] = "gmm";
  ck.config["classes"] = std::to_string(classes_.size());
  for (std::size_t c = 0; c < classes_.size(); ++c) append_mixture(ck, "class" + std::to_string(c), classes_[c]);
  return ck;
}

GmmClassifier GmmClassifier::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.value("kind") != "gmm") throw Error(ErrorKind::BadFormat, "checkpoint is not a GMM");
  GmmClassifier out;
  const int n = std::stoi(ckpt.value("classes"));
  for (int c = 0; c < n; ++c) out.classes_.push_back(read_mixture(ckpt, "class" + std::to_string(c)));
  return out;
}

}  // namespace hv
