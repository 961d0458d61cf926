#include "henvox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "henvox/error.hpp"

namespace hv {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kEdgeS = 0.01;
constexpr double kLeadS = 0.1;
constexpr double kModDepth = 0.25;
constexpr double kMultiLabelRate = 0.13;  // only 3-member masters qualify, ~10% overall

CallRecipe make(int c, Range total, Range burst, Range gap, Range f0, Range rep, Range amp,
                std::array<double, 3> harm, double chirp = 0.0) {
  CallRecipe r;
  r.subclass = c;
  r.total_s = total;
  r.burst_s = burst;
  r.gap_s = gap;
  r.fundamental_hz = f0;
  r.repetition_hz = rep;
  r.amplitude = amp;
  r.harmonics = harm;
  r.chirp = chirp;
  return r;
}

const std::array<CallRecipe, kNumSubclasses>& recipes() {
  static const std::array<CallRecipe, kNumSubclasses> table = {
      // food: short repetitive clucks, sequences under 4 s
      make(0, {2.0, 3.5}, {0.06, 0.12}, {0.15, 0.3}, {500, 700}, {10, 14}, {0.4, 0.6}, {1.0, 0.6, 0.3}),
      // distress: very high, repetitive
      make(1, {2.5, 3.5}, {0.15, 0.25}, {0.1, 0.2}, {1700, 2000}, {5, 7}, {0.4, 0.6}, {1.0, 0.3, 0.1}),
      // panic: high, loud, persistent
      make(2, {4.5, 5.5}, {0.3, 0.6}, {0.08, 0.15}, {1400, 1700}, {3, 5}, {0.75, 0.9}, {1.0, 0.8, 0.5}),
      // egg laying: low short sequences
      make(3, {2.0, 3.0}, {0.1, 0.2}, {0.2, 0.35}, {250, 400}, {6, 8}, {0.4, 0.6}, {1.0, 0.7, 0.5}),
      // fear: high, fast-paced
      make(4, {2.0, 3.0}, {0.05, 0.1}, {0.06, 0.1}, {1200, 1400}, {16, 20}, {0.4, 0.6}, {1.0, 0.2, 0.05}),
      // alarm: long (< 6 s), interruptions under 0.5 s
      make(5, {3.5, 5.5}, {0.4, 0.8}, {0.15, 0.4}, {850, 1000}, {2, 3}, {0.4, 0.6}, {1.0, 0.5, 0.3}),
      // gakel: variable frequency
      make(6, {2.5, 3.5}, {0.2, 0.35}, {0.12, 0.25}, {400, 600}, {5, 7}, {0.4, 0.6}, {1.0, 0.4, 0.4}, 0.5),
      // lonely: high, about 2 s
      make(7, {1.6, 2.4}, {0.25, 0.4}, {0.15, 0.3}, {2200, 2600}, {3, 4}, {0.4, 0.6}, {1.0, 0.15, 0.05}),
  };
  return table;
}

double draw(std::mt19937_64& rng, Range r) {
  return r.lo == r.hi ? r.lo : std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

struct Voice {
  double f0;
  double rep;
  double amp;
  double phase;
};

Voice draw_voice(std::mt19937_64& rng, const CallRecipe& r) {
  return {draw(rng, r.fundamental_hz), draw(rng, r.repetition_hz), draw(rng, r.amplitude),
          std::uniform_real_distribution<double>(0.0, kTwoPi)(rng)};
}

void render_burst(std::vector<double>& out, int sr, Burst b, const Voice& v, const CallRecipe& r) {
  const auto first = static_cast<std::size_t>(std::lround(b.start_s * sr));
  const auto last = std::min(out.size(), static_cast<std::size_t>(std::lround(b.end_s * sr)));
  const double len = (b.end_s - b.start_s);
  double norm = 0.0;
  for (double h : r.harmonics) norm += h;
  double phase = v.phase;
  for (std::size_t n = first; n < last; ++n) {
    const double t = static_cast<double>(n - first) / sr;
    const double f = v.f0 * (1.0 + r.chirp * t / len);
    phase += kTwoPi * f / sr;
    double s = 0.0;
    for (std::size_t h = 0; h < r.harmonics.size(); ++h) {
      const double k = static_cast<double>(h + 1);
      if (k * f >= 0.95 * sr / 2.0) break;
      s += r.harmonics[h] * std::sin(k * phase);
    }
    double env = 1.0 - kModDepth * 0.5 * (1.0 - std::cos(kTwoPi * v.rep * t));
    const double edge = std::min({t, len - t, kEdgeS}) / kEdgeS;
    env *= 0.5 * (1.0 - std::cos(std::numbers::pi * std::clamp(edge, 0.0, 1.0)));
    out[n] += v.amp * env * s / norm;
  }
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void CallRecipe::validate() const {
  for (const Range& r : {burst_s, gap_s, fundamental_hz, repetition_hz, total_s, amplitude}) {
    if (!r.valid()) throw Error(ErrorKind::InvalidConfig, "recipe range has lo > hi");
  }
  if (subclass < 0 || subclass >= kNumSubclasses) throw Error(ErrorKind::InvalidConfig, "recipe subclass");
  if (burst_s.lo <= 2 * kEdgeS || fundamental_hz.lo <= 0.0 || total_s.lo <= 0.0) {
    throw Error(ErrorKind::InvalidConfig, "recipe has non-positive durations or frequency");
  }
  if (2 * burst_s.hi + gap_s.hi + 2 * kLeadS > total_s.lo) {
    throw Error(ErrorKind::InvalidConfig, "recipe cannot fit two bursts");
  }
}

const CallRecipe& recipe_for(int subclass) {
  if (subclass < 0 || subclass >= kNumSubclasses) throw Error(ErrorKind::InvalidConfig, "unknown subclass");
  return recipes()[static_cast<std::size_t>(subclass)];
}

GeneratedClip generate_clip(const CallRecipe& recipe, std::uint64_t seed,
                            const std::optional<CallRecipe>& secondary) {
  recipe.validate();
  if (secondary) secondary->validate();
  std::mt19937_64 rng(seed);
  const int sr = kSampleRate;
  const double total = draw(rng, recipe.total_s);
  const auto n = static_cast<std::size_t>(std::lround(total * sr));

  GeneratedClip out;
  double t = kLeadS + std::uniform_real_distribution<double>(0.0, kLeadS)(rng);
  for (;;) {
    const double len = draw(rng, recipe.burst_s);
    if (t + len > total - kLeadS) break;
    out.bursts.push_back({t, t + len});
    t += len + draw(rng, recipe.gap_s);
  }

  std::vector<double> wave(n, 0.0);
  const Voice main = draw_voice(rng, recipe);
  const Voice other = secondary ? draw_voice(rng, *secondary) : main;
  for (std::size_t i = 0; i < out.bursts.size(); ++i) {
    const bool alt = secondary && i % 2 == 1;
    render_burst(wave, sr, out.bursts[i], alt ? other : main, alt ? *secondary : recipe);
  }
  std::normal_distribution<double> noise(0.0, std::pow(10.0, recipe.noise_db / 20.0));
  out.clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.clip.samples[i] = static_cast<float>(std::clamp(wave[i] + noise(rng), -1.0, 1.0));
  }
  out.clip.sample_rate = sr;
  std::vector<int> labels{recipe.subclass};
  if (secondary) labels.push_back(secondary->subclass);
  out.label = LabelVector::from_indices(labels);
  return out;
}

std::vector<ManifestEntry> generate_dataset(const std::filesystem::path& out_dir, int per_class,
                                            std::uint64_t seed) {
  if (per_class < 1) throw Error(ErrorKind::InvalidConfig, "per_class must be at least 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<ManifestEntry> entries;
  for (int c = 0; c < kNumSubclasses; ++c) {
    const auto& r = recipe_for(c);
    // stratified 20% test draw
    std::vector<int> order(static_cast<std::size_t>(per_class));
    for (int i = 0; i < per_class; ++i) order[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 split_rng(splitmix64(seed ^ (0x5157ULL + static_cast<std::uint64_t>(c))));
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto n_test = static_cast<std::size_t>(std::lround(0.2 * per_class));
    std::vector<bool> is_test(static_cast<std::size_t>(per_class), false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[static_cast<std::size_t>(order[i])] = true;

    for (int i = 0; i < per_class; ++i) {
      const std::uint64_t clip_seed =
          splitmix64(seed * 0x100000001b3ULL + static_cast<std::uint64_t>(c * per_class + i));
      std::mt19937_64 pick(splitmix64(clip_seed));
      std::optional<CallRecipe> second;
      const auto members = members_of(kMasterOf[static_cast<std::size_t>(c)]);
      if (members.size() == 3 && std::uniform_real_distribution<double>(0.0, 1.0)(pick) < kMultiLabelRate) {
        std::vector<int> others;
        for (int m : members) if (m != c) others.push_back(m);
        second = recipe_for(others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(pick)]);
      }
      GeneratedClip g = generate_clip(r, clip_seed, second);
      char name[64];
      std::snprintf(name, sizeof name, "%s_%03d", std::string(subclass_token(c)).c_str(), i);
      g.clip.source_id = name;
      const std::filesystem::path rel = std::string(name) + ".wav";
      write_wav(out_dir / rel, g.clip);
      entries.push_back({rel, g.label, is_test[static_cast<std::size_t>(i)] ? "test" : "train"});
    }
  }
  write_manifest(out_dir / "manifest.tsv", entries);
  return entries;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries) {
  std::ofstream f(manifest, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoFailure, "cannot write " + manifest.string());
  for (const auto& e : entries) {
    f << e.path.generic_string() << '\t' << e.label.to_string();
    if (!e.split.empty()) f << '\t' << e.split;
    f << '\n';
  }
  if (!f) throw Error(ErrorKind::IoFailure, "write failed: " + manifest.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream f(manifest);
  if (!f) throw Error(ErrorKind::IoFailure, "cannot read " + manifest.string());
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, '\t');) fields.push_back(field);
    if (fields.size() < 2 || fields.size() > 3) {
      throw Error(ErrorKind::BadFormat, manifest.string() + ":" + std::to_string(lineno) + ": expected 2 or 3 fields");
    }
    out.push_back({fields[0], LabelVector::parse(fields[1]), fields.size() == 3 ? fields[2] : ""});
  }
  return out;
}

std::filesystem::path resolve_entry(const std::filesystem::path& manifest, const ManifestEntry& e) {
  return e.path.is_absolute() ? e.path : manifest.parent_path() / e.path;
}

}  // namespace hv
