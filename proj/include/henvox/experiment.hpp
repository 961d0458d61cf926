#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "henvox/cascade.hpp"
#include "henvox/features.hpp"
#include "henvox/gmm.hpp"
#include "henvox/run_config.hpp"
#include "henvox/synth.hpp"
#include "henvox/train.hpp"

namespace hv {

using WarnFn = std::function<void(const std::string&)>;

// Extracts features for every manifest entry whose split matches `split`
// (empty matches all). Clips without syllables are skipped and reported.
std::vector<MultiChannelFeatures> extract_manifest(const std::filesystem::path& manifest,
                                                   const FeatureOptions& opts, const std::string& split = {},
                                                   const WarnFn& warn = {});

// The model's input channels for one feature set. MFCC and LFCC are the
// first and last 40 cepstral columns.
ChannelInputs select_channels(const MultiChannelFeatures& clip, FeatureSet set);

// Fixed-length baseline input: per-column mean then standard deviation over
// time for each selected channel.
Eigen::VectorXd summary_vector(const MultiChannelFeatures& clip, FeatureSet set);

// InvalidLabels when a clip carries no label.
std::vector<Sample> make_samples(std::span<const MultiChannelFeatures> clips, FeatureSet set);

enum class GridModel { Sharnn, Gmm, Cascade };
inline constexpr std::array<GridModel, 3> kGridModels = {GridModel::Sharnn, GridModel::Gmm, GridModel::Cascade};
std::string_view grid_model_name(GridModel m);

// Indices into a clip list.
struct CellSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Stratified test hold-out; fold 0 of the remaining pool is the validation set.
CellSplit grid_split(std::span<const MultiChannelFeatures> clips, const RunConfig& cfg, std::uint64_t seed);

// Test sample-F1 of one model on one feature set. The seed drives both the
// model initialisation and training order.
double run_cell(std::span<const MultiChannelFeatures> clips, const CellSplit& split, FeatureSet set,
                GridModel model, const RunConfig& cfg, std::uint64_t seed);

struct GridCell {
  FeatureSet set = FeatureSet::ThreeChannel;
  GridModel model = GridModel::Sharnn;
  std::vector<double> f1;  // one per seed

  double mean() const;
};

struct GridResult {
  std::vector<std::uint64_t> seeds;
  std::vector<GridCell> cells;  // feature-set major, model minor

  const GridCell& cell(FeatureSet set, GridModel model) const;
  std::string to_text() const;
};

GridResult run_grid(std::span<const MultiChannelFeatures> clips, const RunConfig& cfg,
                    std::span<const FeatureSet> sets = kAllFeatureSets,
                    std::span<const GridModel> models = kGridModels);

}  // namespace hv
