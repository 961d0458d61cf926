#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "henvox/cascade.hpp"
#include "henvox/features.hpp"
#include "henvox/model.hpp"
#include "henvox/train.hpp"

namespace hv {

enum class FeatureSet { Time, FormantsSpectral, Mfcc, Lfcc, MfccLfcc, ThreeChannel };

inline constexpr std::array<FeatureSet, 6> kAllFeatureSets = {
    FeatureSet::Time, FeatureSet::FormantsSpectral, FeatureSet::Mfcc,
    FeatureSet::Lfcc, FeatureSet::MfccLfcc,         FeatureSet::ThreeChannel};

// "time_only", "freq_only(formants+spectral)", "freq_only(mfcc)", "freq_only(lfcc)",
// "freq_only(mfcc+lfcc)", "three_channel".
std::string_view feature_set_name(FeatureSet set);
FeatureSet parse_feature_set(std::string_view text);

// Flat key=value run description.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  FeatureOptions features;
  FeatureSet experiment = FeatureSet::ThreeChannel;
  int gmm_components = 4;
  CascadeRule cascade_rule = CascadeRule::MajorityVote;
  double test_frac = 0.2;
  int folds = 10;
  int grid_seeds = 10;

  void validate() const;
  // Model config with channel widths matching `experiment`.
  ModelConfig model_for(FeatureSet set) const;

  std::map<std::string, std::string> to_map() const;
  static RunConfig from_map(const std::map<std::string, std::string>& kv);  // rejects unknown keys
  std::string to_text() const;
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace hv
