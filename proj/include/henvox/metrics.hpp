#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "henvox/labels.hpp"

namespace hv {

// A possibly-empty set of subclasses, bit i = subclass i.
using LabelMask = std::uint8_t;

// Mean over samples of 2|P∩T| / (|P|+|T|); a sample with both sets empty scores 1.
double sample_f1(std::span<const LabelMask> preds, std::span<const LabelMask> truths);

// Binary F1 of each subclass bit across samples (0 when the class is never
// present nor predicted).
std::array<double, kNumSubclasses> per_class_f1(std::span<const LabelMask> preds,
                                                std::span<const LabelMask> truths);

// Multi-label decision from logits: every subclass with sigmoid > 0.5, or the
// single argmax subclass when none clears the threshold.
LabelMask decide_labels(const Eigen::VectorXd& logits);

using MasterCounts = std::array<std::array<long, kNumMasters>, kNumMasters>;

struct ConfusionReport {
  MasterCounts counts{};  // rows = true master, columns = predicted master
  std::array<double, kNumMasters> precision{};
  std::array<double, kNumMasters> recall{};
  std::array<bool, kNumMasters> precision_undefined{};
  std::array<bool, kNumMasters> recall_undefined{};

  long total() const;
};

ConfusionReport confusion_from_counts(const MasterCounts& counts);

// Single-label subclass predictions/truths, mapped to master classes.
ConfusionReport confusion_matrix(std::span<const int> pred_subclass, std::span<const int> true_subclass);

struct SplitPlan {
  std::vector<std::size_t> test;
  std::vector<std::vector<std::size_t>> folds;  // partition of the non-test pool
  std::uint64_t seed = 0;

  std::vector<std::size_t> pool() const;
  std::vector<std::size_t> fold_train(std::size_t k) const;
  const std::vector<std::size_t>& fold_validation(std::size_t k) const { return folds.at(k); }
};

// Stratified by each sample's class (its primary subclass). Per class,
// round(test_frac * count) samples go to the test set; the remainder is dealt
// into k stratified folds.
SplitPlan make_split(std::span<const int> classes, double test_frac, int k, std::uint64_t seed);

struct EvalReport {
  double sample_f1 = 0.0;
  std::array<double, kNumSubclasses> class_f1{};
  ConfusionReport confusion;
  std::size_t num_samples = 0;
  std::string split;
  std::uint64_t seed = 0;

  std::string to_text() const;
};

EvalReport evaluate_predictions(std::span<const LabelMask> preds, std::span<const LabelMask> truths,
                                std::span<const int> pred_single, std::span<const int> true_single);

}  // namespace hv
