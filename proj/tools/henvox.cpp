#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "henvox/checkpoint.hpp"
#include "henvox/error.hpp"
#include "henvox/experiment.hpp"
#include "henvox/feature_cache.hpp"
#include "henvox/model.hpp"
#include "henvox/run_config.hpp"
#include "henvox/synth.hpp"
#include "henvox/train.hpp"
#include "henvox/vad.hpp"

namespace fs = std::filesystem;

namespace {

hv::RunConfig load_config(const std::string& path) {
  return path.empty() ? hv::RunConfig{} : hv::RunConfig::load(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw hv::Error(hv::ErrorKind::IoFailure, "cannot write " + path.string());
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

hv::FeatureSet checkpoint_features(const hv::Checkpoint& ck) {
  auto it = ck.config.find("experiment");
  return it == ck.config.end() ? hv::FeatureSet::ThreeChannel : hv::parse_feature_set(it->second);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"henvox: multi-label hen vocalization classifier"};
  app.require_subcommand(1);

  std::string out, config, manifest, cache, val_cache, history, checkpoint, wav, split;
  int per_class = 20;
  std::uint64_t seed = 0;

  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic dataset");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--per-class", per_class, "Clips per subclass")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "Generator seed");

  auto* segment = app.add_subcommand("segment", "Print detected syllables as start<TAB>end seconds");
  segment->add_option("--wav", wav, "Input WAV")->required();
  segment->add_option("--config", config, "Run config");

  auto* features = app.add_subcommand("features", "Extract a feature cache from a manifest");
  features->add_option("--manifest", manifest, "Manifest TSV")->required();
  features->add_option("--config", config, "Run config");
  features->add_option("--split", split, "Only entries with this split tag");
  features->add_option("--out", out, "Cache file")->required();

  auto* trainc = app.add_subcommand("train", "Train the attention model");
  trainc->add_option("--cache", cache, "Training feature cache")->required();
  trainc->add_option("--val-cache", val_cache, "Validation feature cache (default: training cache)");
  trainc->add_option("--config", config, "Run config");
  trainc->add_option("--out", out, "Checkpoint path")->required();
  trainc->add_option("--history", history, "Per-epoch history TSV");

  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint on a feature cache");
  evalc->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
  evalc->add_option("--cache", cache, "Feature cache")->required();
  evalc->add_option("--out", out, "Report path (default: stdout)");

  auto* classify = app.add_subcommand("classify", "Label one WAV file");
  classify->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
  classify->add_option("--wav", wav, "Input WAV")->required();
  classify->add_option("--config", config, "Run config (feature options)");

  auto* grid = app.add_subcommand("grid", "Feature-combination x model experiment grid");
  grid->add_option("--manifest", manifest, "Manifest TSV")->required();
  grid->add_option("--config", config, "Run config");
  grid->add_option("--out", out, "Table path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto entries = hv::generate_dataset(out, per_class, seed);
      std::cout << entries.size() << " clips written to " << out << '\n';
    } else if (*segment) {
      const auto cfg = load_config(config);
      for (const auto& s : hv::segment_syllables(hv::load_wav(wav), cfg.features.vad)) {
        std::printf("%.6f\t%.6f\n", s.start_s, s.end_s);
      }
    } else if (*features) {
      const auto cfg = load_config(config);
      const auto clips = hv::extract_manifest(manifest, cfg.features, split, warn);
      hv::write_feature_cache(out, clips);
      std::cout << clips.size() << " clips cached to " << out << '\n';
    } else if (*trainc) {
      const auto cfg = load_config(config);
      const auto clips = hv::read_feature_cache(cache);
      const auto samples = hv::make_samples(clips, cfg.experiment);
      std::vector<hv::Sample> val;
      if (!val_cache.empty()) val = hv::make_samples(hv::read_feature_cache(val_cache), cfg.experiment);
      const auto res = hv::train(samples, val, cfg.train, cfg.model_for(cfg.experiment));
      hv::Checkpoint ck = hv::to_checkpoint(res.params);
      ck.config["experiment"] = std::string(hv::feature_set_name(cfg.experiment));
      hv::write_checkpoint(out, ck);
      if (!history.empty()) hv::write_history(history, res.history);
      if (res.best_epoch > 0) {
        std::printf("best epoch %d, sample F1 %.12f\n", res.best_epoch,
                    res.history[static_cast<std::size_t>(res.best_epoch - 1)].val_sample_f1);
      }
    } else if (*evalc) {
      const auto ck = hv::read_checkpoint(checkpoint);
      const auto params = hv::from_checkpoint(ck);
      const auto samples = hv::make_samples(hv::read_feature_cache(cache), checkpoint_features(ck));
      auto report = hv::evaluate(params, samples);
      report.split = fs::path(cache).filename().string();
      if (out.empty()) std::cout << report.to_text();
      else write_text(out, report.to_text());
    } else if (*classify) {
      const auto cfg = load_config(config);
      const auto ck = hv::read_checkpoint(checkpoint);
      const auto params = hv::from_checkpoint(ck);
      const auto f = hv::extract_features(hv::load_wav(wav), cfg.features);
      if (!f.has_syllables()) throw hv::Error(hv::ErrorKind::SegmentTooShort, "no syllables found in " + wav);
      const auto p = hv::predict(params, hv::select_channels(f, checkpoint_features(ck)));
      std::cout << hv::LabelVector::from_mask(p.labels).to_string() << '\n';
    } else if (*grid) {
      const auto cfg = load_config(config);
      const auto clips = hv::extract_manifest(manifest, cfg.features, {}, warn);
      const auto text = hv::run_grid(clips, cfg).to_text();
      if (out.empty()) std::cout << text;
      else write_text(out, text);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
