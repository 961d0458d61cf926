#include "henvox/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "henvox/checkpoint.hpp"
#include "henvox/error.hpp"

namespace hv {
namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) throw Error(ErrorKind::InvalidConfig, key + ": bad value '" + v + "'");
  return out;
}

std::string num(double v) { return format_double(v); }
std::string num(long long v) { return std::to_string(v); }

template <typename E>
E parse_enum(const std::string& key, const std::string& v,
             std::initializer_list<std::pair<std::string_view, E>> names) {
  for (const auto& [n, e] : names) if (n == v) return e;
  throw Error(ErrorKind::InvalidConfig, key + ": unknown value '" + v + "'");
}

template <typename E>
std::string enum_name(E e, std::initializer_list<std::pair<std::string_view, E>> names) {
  for (const auto& [n, x] : names) if (x == e) return std::string(n);
  return {};
}

const std::initializer_list<std::pair<std::string_view, OptimizerKind>> kOptimizers = {
    {"adadelta", OptimizerKind::Adadelta}, {"adam", OptimizerKind::Adam}, {"sgd", OptimizerKind::Sgd}};
const std::initializer_list<std::pair<std::string_view, AlphaMode>> kAlphaModes = {
    {"class_balanced", AlphaMode::ClassBalanced}, {"fixed", AlphaMode::Fixed}};
const std::initializer_list<std::pair<std::string_view, MasterMixer>> kMixers = {
    {"mean", MasterMixer::Mean}, {"max", MasterMixer::Max}, {"logsumexp", MasterMixer::LogSumExp}};
const std::initializer_list<std::pair<std::string_view, CascadeRule>> kRules = {
    {"majority_vote", CascadeRule::MajorityVote}, {"weighted_interpolation", CascadeRule::WeightedInterpolation}};

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
};

#define HV_INT(member) \
  Field{[](const RunConfig& c) { return num(static_cast<long long>(c.member)); }, \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_number<decltype(c.member)>(k, v); }}
#define HV_REAL(member) \
  Field{[](const RunConfig& c) { return num(c.member); }, \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_number<double>(k, v); }}
#define HV_ENUM(member, table) \
  Field{[](const RunConfig& c) { return enum_name(c.member, table); }, \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_enum(k, v, table); }}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"experiment", Field{[](const RunConfig& c) { return std::string(feature_set_name(c.experiment)); },
                           [](RunConfig& c, const std::string&, const std::string& v) {
                             c.experiment = parse_feature_set(v);
                           }}},
      {"model.hidden_size", HV_INT(model.hidden_size)},
      {"model.boom_dim", HV_INT(model.boom_dim)},
      {"model.num_layers", HV_INT(model.num_layers)},
      {"model.seed", HV_INT(model.seed)},
      {"train.batch_size", HV_INT(train.batch_size)},
      {"train.cbce_ratio", HV_REAL(train.cbce_ratio)},
      {"train.dropout", HV_REAL(train.dropout)},
      {"train.learning_rate", HV_REAL(train.learning_rate)},
      {"train.optimizer", HV_ENUM(train.optimizer, kOptimizers)},
      {"train.alpha_mode", HV_ENUM(train.alpha_mode, kAlphaModes)},
      {"train.alpha", HV_REAL(train.alpha)},
      {"train.mixer", HV_ENUM(train.mixer, kMixers)},
      {"train.epochs", HV_INT(train.epochs)},
      {"train.seed", HV_INT(train.seed)},
      {"train.rho", HV_REAL(train.rho)},
      {"train.epsilon", HV_REAL(train.epsilon)},
      {"vad.energy_threshold_ratio", HV_REAL(features.vad.energy_threshold_ratio)},
      {"vad.entropy_threshold", HV_REAL(features.vad.entropy_threshold)},
      {"vad.prominence_threshold", HV_REAL(features.vad.prominence_threshold)},
      {"vad.min_syllable_ms", HV_REAL(features.vad.min_syllable_ms)},
      {"vad.merge_gap_ms", HV_REAL(features.vad.merge_gap_ms)},
      {"features.mel_divisor", HV_REAL(features.mel_divisor)},
      {"features.nfft", HV_INT(features.nfft)},
      {"features.frame_ms", HV_REAL(features.frame_ms)},
      {"features.hop_ms", HV_REAL(features.hop_ms)},
      {"gmm.components", HV_INT(gmm_components)},
      {"cascade.rule", HV_ENUM(cascade_rule, kRules)},
      {"split.test_frac", HV_REAL(test_frac)},
      {"split.folds", HV_INT(folds)},
      {"grid.seeds", HV_INT(grid_seeds)},
  };
  return table;
}

#undef HV_INT
#undef HV_REAL
#undef HV_ENUM

}  // namespace

std::string_view feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::Time: return "time_only";
    case FeatureSet::FormantsSpectral: return "freq_only(formants+spectral)";
    case FeatureSet::Mfcc: return "freq_only(mfcc)";
    case FeatureSet::Lfcc: return "freq_only(lfcc)";
    case FeatureSet::MfccLfcc: return "freq_only(mfcc+lfcc)";
    case FeatureSet::ThreeChannel: return "three_channel";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view text) {
  std::string s(text);
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (FeatureSet f : kAllFeatureSets) if (feature_set_name(f) == s) return f;
  throw Error(ErrorKind::InvalidConfig, "unknown experiment '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  model_for(experiment).validate();
  train.validate();
  features.validate();
  if (gmm_components < 1) throw Error(ErrorKind::InvalidConfig, "gmm.components must be >= 1");
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw Error(ErrorKind::InvalidConfig, "split.test_frac must lie in (0, 1)");
  if (folds < 2) throw Error(ErrorKind::InvalidConfig, "split.folds must be >= 2");
  if (grid_seeds < 1) throw Error(ErrorKind::InvalidConfig, "grid.seeds must be >= 1");
}

ModelConfig RunConfig::model_for(FeatureSet set) const {
  ModelConfig m = model;
  m.dropout = train.dropout;
  switch (set) {
    case FeatureSet::Time: m.channel_input_dims = {kTimeFeatureDim}; break;
    case FeatureSet::FormantsSpectral: m.channel_input_dims = {kSpectralFeatureDim}; break;
    case FeatureSet::Mfcc:
    case FeatureSet::Lfcc: m.channel_input_dims = {kCepstralDim}; break;
    case FeatureSet::MfccLfcc: m.channel_input_dims = {2 * kCepstralDim}; break;
    case FeatureSet::ThreeChannel:
      m.channel_input_dims = {kTimeFeatureDim, kSpectralFeatureDim, 2 * kCepstralDim};
      break;
  }
  return m;
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields()) out[k] = f.get(*this);
  return out;
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& kv) {
  RunConfig c;
  for (const auto& [k, v] : kv) {
    auto it = fields().find(k);
    if (it == fields().end()) throw Error(ErrorKind::InvalidConfig, "unknown config key '" + k + "'");
    it->second.set(c, k, v);
  }
  c.validate();
  return c;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + "=" + v + "\n";
  return out;
}

RunConfig RunConfig::parse(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(lineno) + ": expected key=value");
    }
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    if (!kv.emplace(key, strip(line.substr(eq + 1))).second) {
      throw Error(ErrorKind::InvalidConfig, "duplicate key '" + key + "'");
    }
  }
  return from_map(kv);
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::IoFailure, "cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

}  // namespace hv
