#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "henvox/error.hpp"
#include "henvox/experiment.hpp"
#include "henvox/feature_cache.hpp"
#include "henvox/features.hpp"
#include "henvox/loss.hpp"
#include "henvox/metrics.hpp"
#include "henvox/model.hpp"
#include "henvox/run_config.hpp"
#include "henvox/synth.hpp"
#include "henvox/train.hpp"
#include "henvox/vad.hpp"

namespace py = pybind11;

namespace {

hv::AudioClip to_clip(py::array_t<float, py::array::c_style | py::array::forcecast> samples, int sample_rate) {
  if (samples.ndim() != 1) throw hv::Error(hv::ErrorKind::UnsupportedFormat, "expected a 1-D array");
  hv::AudioClip clip;
  clip.samples.assign(samples.data(), samples.data() + samples.size());
  clip.sample_rate = sample_rate;
  return clip;
}

py::array_t<float> to_array(const std::vector<float>& v) {
  return py::array_t<float>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict to_dict(const hv::MultiChannelFeatures& f) {
  py::dict d;
  d["clip_id"] = f.clip_id;
  d["time"] = f.time;
  d["spectral"] = f.spectral;
  d["cepstral"] = f.cepstral;
  d["labels"] = f.label ? py::cast(f.label->to_string()) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-label hen vocalization classification";

  py::register_exception<hv::Error>(m, "HenvoxError", PyExc_RuntimeError);

  m.attr("SAMPLE_RATE") = hv::kSampleRate;

  m.def("load_wav", [](const std::filesystem::path& path) {
    const auto clip = hv::load_wav(path);
    return py::make_tuple(to_array(clip.samples), clip.sample_rate);
  }, py::arg("path"), "Returns (samples float32, sample_rate).");

  m.def("write_wav", [](const std::filesystem::path& path, py::array_t<float, py::array::c_style | py::array::forcecast> samples,
                        int sample_rate) { hv::write_wav(path, to_clip(samples, sample_rate)); },
        py::arg("path"), py::arg("samples"), py::arg("sample_rate") = hv::kSampleRate);

  m.def("segment_syllables", [](py::array_t<float, py::array::c_style | py::array::forcecast> samples, int sample_rate) {
    std::vector<std::pair<double, double>> out;
    for (const auto& s : hv::segment_syllables(to_clip(samples, sample_rate))) out.emplace_back(s.start_s, s.end_s);
    return out;
  }, py::arg("samples"), py::arg("sample_rate") = hv::kSampleRate, "List of (start_s, end_s).");

  m.def("extract_features", [](py::array_t<float, py::array::c_style | py::array::forcecast> samples, int sample_rate) {
    return to_dict(hv::extract_features(to_clip(samples, sample_rate)));
  }, py::arg("samples"), py::arg("sample_rate") = hv::kSampleRate);

  m.def("mel_scale", &hv::mel_scale, py::arg("hz"), py::arg("divisor") = 100.0);
  m.def("pitch", [](py::array_t<float, py::array::c_style | py::array::forcecast> samples, int sample_rate,
                    double f_min, double f_max) {
    return hv::pitch(std::span<const float>(samples.data(), static_cast<std::size_t>(samples.size())), sample_rate,
                     f_min, f_max);
  }, py::arg("samples"), py::arg("sample_rate") = hv::kSampleRate, py::arg("f_min") = 100.0, py::arg("f_max") = 3000.0);

  m.def("cbce", &hv::cbce, py::arg("y"), py::arg("p"), py::arg("alpha") = 1.0);

  m.def("sample_f1", [](const std::vector<std::vector<std::string>>& preds,
                        const std::vector<std::vector<std::string>>& truths) {
    auto masks = [](const std::vector<std::vector<std::string>>& sets) {
      std::vector<hv::LabelMask> out;
      for (const auto& s : sets) {
        hv::LabelMask mask = 0;
        for (const auto& tok : s) {
          const auto c = hv::parse_subclass(tok);
          if (!c) throw hv::Error(hv::ErrorKind::InvalidLabels, "unknown label '" + tok + "'");
          mask = static_cast<hv::LabelMask>(mask | (1u << *c));
        }
        out.push_back(mask);
      }
      return out;
    };
    return hv::sample_f1(masks(preds), masks(truths));
  }, py::arg("predictions"), py::arg("truths"), "Each argument is a list of label-token lists.");

  m.def("generate_clip", [](const std::string& label, std::uint64_t seed) {
    const auto c = hv::parse_subclass(label);
    if (!c) throw hv::Error(hv::ErrorKind::InvalidLabels, "unknown label '" + label + "'");
    const auto g = hv::generate_clip(hv::recipe_for(*c), seed);
    return py::make_tuple(to_array(g.clip.samples), g.label.to_string());
  }, py::arg("label"), py::arg("seed") = 0, "Returns (samples, labels).");

  m.def("generate_dataset", [](const std::filesystem::path& out_dir, int per_class, std::uint64_t seed) {
    return hv::generate_dataset(out_dir, per_class, seed).size();
  }, py::arg("out_dir"), py::arg("per_class") = 20, py::arg("seed") = 0, "Returns the number of clips written.");

  m.def("default_config", [] { return hv::RunConfig{}.to_text(); });

  m.def("extract_manifest", [](const std::filesystem::path& manifest, const std::filesystem::path& cache,
                               const std::string& config, const std::string& split) {
    const auto cfg = hv::RunConfig::parse(config);
    const auto clips = hv::extract_manifest(manifest, cfg.features, split);
    hv::write_feature_cache(cache, clips);
    return clips.size();
  }, py::arg("manifest"), py::arg("cache"), py::arg("config") = "", py::arg("split") = "",
     "Writes a feature cache; returns the number of clips kept.");

  m.def("read_feature_cache", [](const std::filesystem::path& cache) {
    py::list out;
    for (const auto& f : hv::read_feature_cache(cache)) out.append(to_dict(f));
    return out;
  }, py::arg("cache"));

  m.def("train", [](const std::filesystem::path& cache, const std::filesystem::path& checkpoint,
                    const std::string& config, const std::optional<std::filesystem::path>& val_cache) {
    const auto cfg = hv::RunConfig::parse(config);
    const auto samples = hv::make_samples(hv::read_feature_cache(cache), cfg.experiment);
    std::vector<hv::Sample> val;
    if (val_cache) val = hv::make_samples(hv::read_feature_cache(*val_cache), cfg.experiment);
    hv::TrainResult res;
    {
      py::gil_scoped_release release;
      res = hv::train(samples, val, cfg.train, cfg.model_for(cfg.experiment));
    }
    auto ck = hv::to_checkpoint(res.params);
    ck.config["experiment"] = std::string(hv::feature_set_name(cfg.experiment));
    hv::write_checkpoint(checkpoint, ck);
    std::vector<std::tuple<int, double, double>> history;
    for (const auto& r : res.history) history.emplace_back(r.epoch, r.train_loss, r.val_sample_f1);
    return history;
  }, py::arg("cache"), py::arg("checkpoint"), py::arg("config") = "", py::arg("val_cache") = py::none(),
     "Trains and writes a checkpoint; returns [(epoch, train_loss, val_f1)].");

  m.def("evaluate", [](const std::filesystem::path& checkpoint, const std::filesystem::path& cache) {
    const auto ck = hv::read_checkpoint(checkpoint);
    auto it = ck.config.find("experiment");
    const auto set = it == ck.config.end() ? hv::FeatureSet::ThreeChannel : hv::parse_feature_set(it->second);
    const auto report = hv::evaluate(hv::from_checkpoint(ck), hv::make_samples(hv::read_feature_cache(cache), set));
    py::dict d;
    d["sample_f1"] = report.sample_f1;
    d["class_f1"] = report.class_f1;
    d["confusion"] = report.confusion.counts;
    d["text"] = report.to_text();
    return d;
  }, py::arg("checkpoint"), py::arg("cache"));
}
