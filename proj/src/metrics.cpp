#include "henvox/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "henvox/error.hpp"
#include "henvox/loss.hpp"

namespace hv {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

double sample_f1(std::span<const LabelMask> preds, std::span<const LabelMask> truths) {
  if (preds.size() != truths.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                               std::to_string(truths.size()) + " truths");
  }
  if (preds.empty()) throw Error(ErrorKind::LengthMismatch, "no samples");
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = std::popcount(static_cast<unsigned>(preds[i]));
    const int t = std::popcount(static_cast<unsigned>(truths[i]));
    const int both = std::popcount(static_cast<unsigned>(preds[i] & truths[i]));
    total += (p + t == 0) ? 1.0 : 2.0 * both / static_cast<double>(p + t);
  }
  return total / static_cast<double>(preds.size());
}

std::array<double, kNumSubclasses> per_class_f1(std::span<const LabelMask> preds,
                                                std::span<const LabelMask> truths) {
  if (preds.size() != truths.size()) throw Error(ErrorKind::LengthMismatch, "per-class F1 inputs");
  std::array<double, kNumSubclasses> out{};
  for (int c = 0; c < kNumSubclasses; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = (preds[i] >> c) & 1u;
      const bool t = (truths[i] >> c) & 1u;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const long denom = 2 * tp + fp + fn;
    out[static_cast<std::size_t>(c)] = denom == 0 ? 0.0 : 2.0 * tp / static_cast<double>(denom);
  }
  return out;
}

LabelMask decide_labels(const Eigen::VectorXd& logits) {
  LabelMask m = 0;
  Eigen::Index best = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (sigmoid(logits(i)) > 0.5) m = static_cast<LabelMask>(m | (1u << i));
    if (logits(i) > logits(best)) best = i;
  }
  if (m == 0) m = static_cast<LabelMask>(1u << best);
  return m;
}

long ConfusionReport::total() const {
  long t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), 0L);
  return t;
}

ConfusionReport confusion_from_counts(const MasterCounts& counts) {
  ConfusionReport r;
  r.counts = counts;
  for (int c = 0; c < kNumMasters; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    long row = 0, col = 0;
    for (int k = 0; k < kNumMasters; ++k) {
      row += counts[cu][static_cast<std::size_t>(k)];
      col += counts[static_cast<std::size_t>(k)][cu];
    }
    const double diag = static_cast<double>(counts[cu][cu]);
    r.precision_undefined[cu] = col == 0;
    r.recall_undefined[cu] = row == 0;
    r.precision[cu] = col == 0 ? 0.0 : diag / static_cast<double>(col);
    r.recall[cu] = row == 0 ? 0.0 : diag / static_cast<double>(row);
  }
  return r;
}

ConfusionReport confusion_matrix(std::span<const int> pred_subclass, std::span<const int> true_subclass) {
  if (pred_subclass.size() != true_subclass.size()) {
    throw Error(ErrorKind::LengthMismatch, "confusion matrix inputs differ in length");
  }
  MasterCounts counts{};
  for (std::size_t i = 0; i < pred_subclass.size(); ++i) {
    const int p = pred_subclass[i], t = true_subclass[i];
    if (p < 0 || p >= kNumSubclasses || t < 0 || t >= kNumSubclasses) {
      throw Error(ErrorKind::InvalidLabels, "subclass index out of range");
    }
    ++counts[static_cast<std::size_t>(kMasterOf[static_cast<std::size_t>(t)])]
            [static_cast<std::size_t>(kMasterOf[static_cast<std::size_t>(p)])];
  }
  return confusion_from_counts(counts);
}

std::vector<std::size_t> SplitPlan::pool() const {
  std::vector<std::size_t> out;
  for (const auto& f : folds) out.insert(out.end(), f.begin(), f.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> SplitPlan::fold_train(std::size_t k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (i != k) out.insert(out.end(), folds[i].begin(), folds[i].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

SplitPlan make_split(std::span<const int> classes, double test_frac, int k, std::uint64_t seed) {
  if (!(test_frac >= 0.0 && test_frac < 1.0) || k < 1) {
    throw Error(ErrorKind::InvalidConfig, "need 0 <= test_frac < 1 and k >= 1");
  }
  const std::size_t n = classes.size();
  if (n < static_cast<std::size_t>(5 * k)) {
    throw Error(ErrorKind::TooFewSamplesPerClass,
                std::to_string(n) + " samples is fewer than 5 per fold");
  }
  std::array<std::vector<std::size_t>, kNumSubclasses> by_class;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = classes[i];
    if (c < 0 || c >= kNumSubclasses) throw Error(ErrorKind::InvalidLabels, "class out of range");
    by_class[static_cast<std::size_t>(c)].push_back(i);
  }
  for (int c = 0; c < kNumSubclasses; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorKind::TooFewSamplesPerClass,
                  std::string(subclass_token(c)) + " has fewer than " + std::to_string(k) + " samples");
    }
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(k));
  std::mt19937_64 rng(seed);
  std::size_t next_fold = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(test_frac * static_cast<double>(members.size())));
    plan.test.insert(plan.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    for (std::size_t j = n_test; j < members.size(); ++j) {
      plan.folds[next_fold].push_back(members[j]);
      next_fold = (next_fold + 1) % plan.folds.size();
    }
  }
  std::sort(plan.test.begin(), plan.test.end());
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

EvalReport evaluate_predictions(std::span<const LabelMask> preds, std::span<const LabelMask> truths,
                                std::span<const int> pred_single, std::span<const int> true_single) {
  EvalReport r;
  r.sample_f1 = sample_f1(preds, truths);
  r.class_f1 = per_class_f1(preds, truths);
  r.confusion = confusion_matrix(pred_single, true_single);
  r.num_samples = preds.size();
  return r;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "sample_f1: " << fixed(sample_f1, 12) << "\n";
  out << "num_samples: " << num_samples << "\n";
  out << "split: " << (split.empty() ? "-" : split) << "\n";
  out << "seed: " << seed << "\n";
  out << "\n[per_class_f1]\n";
  for (int c = 0; c < kNumSubclasses; ++c) {
    out << subclass_token(c) << ": " << fixed(class_f1[static_cast<std::size_t>(c)]) << "\n";
  }
  out << "\n[master_confusion]\n";
  out << "true\\pred";
  for (int m = 0; m < kNumMasters; ++m) out << '\t' << master_name(m);
  out << '\n';
  for (int t = 0; t < kNumMasters; ++t) {
    out << master_name(t);
    for (int p = 0; p < kNumMasters; ++p) {
      out << '\t' << confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    out << '\n';
  }
  out << "\n[master_precision_recall]\n";
  for (int m = 0; m < kNumMasters; ++m) {
    const auto mu = static_cast<std::size_t>(m);
    out << master_name(m) << ": precision " << fixed(confusion.precision[mu], 4)
        << (confusion.precision_undefined[mu] ? " (undefined)" : "") << ", recall "
        << fixed(confusion.recall[mu], 4) << (confusion.recall_undefined[mu] ? " (undefined)" : "")
        << "\n";
  }
  return out.str();
}

}  // namespace hv
