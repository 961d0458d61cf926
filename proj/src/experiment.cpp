#include "henvox/experiment.hpp"

#include <cmath>
#include <cstdio>

#include "henvox/error.hpp"
#include "henvox/metrics.hpp"

namespace hv {
namespace {

void append_stats(Eigen::VectorXd& out, Eigen::Index& at, const FeatureMatrix& m) {
  const Eigen::MatrixXd x = m.cast<double>();
  const Eigen::Index cols = x.cols();
  if (x.rows() == 0) {
    out.segment(at, 2 * cols).setZero();
  } else {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::RowVectorXd var = (x.rowwise() - mean).array().square().colwise().mean();
    out.segment(at, cols) = mean.transpose();
    out.segment(at + cols, cols) = var.array().sqrt().transpose();
  }
  at += 2 * cols;
}

template <typename T>
std::vector<T> gather(std::span<const T> all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

std::vector<MultiChannelFeatures> extract_manifest(const std::filesystem::path& manifest,
                                                   const FeatureOptions& opts, const std::string& split,
                                                   const WarnFn& warn) {
  std::vector<MultiChannelFeatures> out;
  for (const auto& e : read_manifest(manifest)) {
    if (!split.empty() && e.split != split) continue;
    AudioClip clip = load_wav(resolve_entry(manifest, e));
    clip.source_id = e.path.stem().string();
    MultiChannelFeatures f = extract_features(clip, opts);
    if (!f.has_syllables()) {
      if (warn) warn("no syllables found in " + clip.source_id + "; clip skipped");
      continue;
    }
    f.label = e.label;
    out.push_back(std::move(f));
  }
  return out;
}

ChannelInputs select_channels(const MultiChannelFeatures& clip, FeatureSet set) {
  const auto& cep = clip.cepstral;
  switch (set) {
    case FeatureSet::Time: return {clip.time};
    case FeatureSet::FormantsSpectral: return {clip.spectral};
    case FeatureSet::Mfcc: return {cep.leftCols(kCepstralDim)};
    case FeatureSet::Lfcc: return {cep.rightCols(kCepstralDim)};
    case FeatureSet::MfccLfcc: return {cep};
    case FeatureSet::ThreeChannel: return {clip.time, clip.spectral, cep};
  }
  return {};
}

Eigen::VectorXd summary_vector(const MultiChannelFeatures& clip, FeatureSet set) {
  const ChannelInputs ch = select_channels(clip, set);
  Eigen::Index dim = 0;
  for (const auto& m : ch) dim += 2 * m.cols();
  Eigen::VectorXd v(dim);
  Eigen::Index at = 0;
  for (const auto& m : ch) append_stats(v, at, m);
  return v;
}

std::vector<Sample> make_samples(std::span<const MultiChannelFeatures> clips, FeatureSet set) {
  std::vector<Sample> out;
  out.reserve(clips.size());
  for (const auto& c : clips) {
    if (!c.label) throw Error(ErrorKind::InvalidLabels, "clip " + c.clip_id + " has no label");
    out.push_back({c.clip_id, select_channels(c, set), *c.label});
  }
  return out;
}

std::string_view grid_model_name(GridModel m) {
  switch (m) {
    case GridModel::Sharnn: return "sharnn";
    case GridModel::Gmm: return "gmm";
    case GridModel::Cascade: return "cascade";
  }
  return "?";
}

CellSplit grid_split(std::span<const MultiChannelFeatures> clips, const RunConfig& cfg, std::uint64_t seed) {
  std::vector<int> classes;
  for (const auto& c : clips) {
    if (!c.label) throw Error(ErrorKind::InvalidLabels, "clip " + c.clip_id + " has no label");
    classes.push_back(c.label->primary());
  }
  const SplitPlan plan = make_split(classes, cfg.test_frac, cfg.folds, seed);
  return {plan.fold_train(0), plan.fold_validation(0), plan.test};
}

double run_cell(std::span<const MultiChannelFeatures> clips, const CellSplit& split, FeatureSet set,
                GridModel model, const RunConfig& cfg, std::uint64_t seed) {
  const auto train_clips = gather(clips, split.train);
  const auto val_clips = gather(clips, split.validation);
  const auto test_clips = gather(clips, split.test);

  std::vector<LabelMask> truth;
  for (const auto& c : test_clips) truth.push_back(c.label->mask());

  if (model == GridModel::Sharnn) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    ModelConfig mc = cfg.model_for(set);
    mc.seed = seed;
    const auto tr = make_samples(train_clips, set);
    const auto va = make_samples(val_clips, set);
    const TrainResult res = train(tr, va, tc, mc);
    return evaluate_f1(res.params, make_samples(test_clips, set));
  }

  std::vector<Eigen::VectorXd> xs;
  std::vector<LabelVector> ys;
  for (const auto& c : train_clips) {
    xs.push_back(summary_vector(c, set));
    ys.push_back(*c.label);
  }
  std::vector<LabelMask> preds;
  GmmOptions go;
  go.components = cfg.gmm_components;
  go.seed = seed;
  if (model == GridModel::Gmm) {
    GmmClassifier gmm;
    gmm.fit(xs, ys, go);
    for (const auto& c : test_clips) {
      preds.push_back(static_cast<LabelMask>(1u << gmm.predict(summary_vector(c, set)).label));
    }
  } else {
    std::vector<Eigen::VectorXd> vx;
    std::vector<LabelVector> vy;
    for (const auto& c : val_clips) {
      vx.push_back(summary_vector(c, set));
      vy.push_back(*c.label);
    }
    CascadeOptions co;
    co.gmm = go;
    co.rule = cfg.cascade_rule;
    const CascadeEnsemble ens = cascade_train(xs, ys, co, vx, vy);
    for (const auto& c : test_clips) {
      preds.push_back(static_cast<LabelMask>(1u << cascade_predict(ens, summary_vector(c, set)).label));
    }
  }
  return sample_f1(preds, truth);
}

double GridCell::mean() const {
  if (f1.empty()) return 0.0;
  double s = 0.0;
  for (double v : f1) s += v;
  return s / static_cast<double>(f1.size());
}

const GridCell& GridResult::cell(FeatureSet set, GridModel model) const {
  for (const auto& c : cells) if (c.set == set && c.model == model) return c;
  throw Error(ErrorKind::InvalidConfig, "grid has no such cell");
}

std::string GridResult::to_text() const {
  std::string out = "features\tmodel\tmean_f1";
  for (auto s : seeds) out += "\tseed" + std::to_string(s);
  out += '\n';
  char buf[32];
  for (const auto& c : cells) {
    out += std::string(feature_set_name(c.set)) + '\t' + std::string(grid_model_name(c.model));
    std::snprintf(buf, sizeof buf, "\t%.4f", c.mean());
    out += buf;
    for (double v : c.f1) {
      std::snprintf(buf, sizeof buf, "\t%.4f", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

GridResult run_grid(std::span<const MultiChannelFeatures> clips, const RunConfig& cfg,
                    std::span<const FeatureSet> sets, std::span<const GridModel> models) {
  cfg.validate();
  GridResult res;
  for (int i = 0; i < cfg.grid_seeds; ++i) res.seeds.push_back(cfg.train.seed + static_cast<std::uint64_t>(i));
  for (FeatureSet s : sets) {
    for (GridModel m : models) res.cells.push_back({s, m, {}});
  }
  for (std::uint64_t seed : res.seeds) {
    const CellSplit split = grid_split(clips, cfg, seed);
    for (auto& cell : res.cells) cell.f1.push_back(run_cell(clips, split, cell.set, cell.model, cfg, seed));
  }
  return res;
}

}  // namespace hv
