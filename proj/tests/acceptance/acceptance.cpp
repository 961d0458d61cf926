// One PASS/FAIL line per acceptance criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "henvox/cascade.hpp"
#include "henvox/checkpoint.hpp"
#include "henvox/dsp.hpp"
#include "henvox/experiment.hpp"
#include "henvox/feature_cache.hpp"
#include "henvox/features.hpp"
#include "henvox/gmm.hpp"
#include "henvox/loss.hpp"
#include "henvox/metrics.hpp"
#include "henvox/run_config.hpp"
#include "henvox/synth.hpp"
#include "henvox/train.hpp"
#include "henvox/vad.hpp"
#include "support.hpp"

using namespace hv;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome gradients() {
  Outcome o;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto g = test::gradient_check(seed);
    checked += g.checked;
    worst = std::max(worst, g.max_rel);
    o.require(g.max_rel < 1e-4, "seed " + std::to_string(seed) + ": " + g.worst);
  }
  if (o.pass) o.detail = fmt("12 seeds, %.0f entries, max rel err %.2e", static_cast<double>(checked), worst);
  return o;
}

Outcome loss_algebra() {
  Outcome o;
  o.require(std::abs(cbce(0.0, 0.5, 1.0) - std::numbers::ln2) < 1e-12, "cbce(0, 0.5) != ln 2");
  o.require(std::abs(cbce(1.0, 0.5, 2.0) - 2.0 * std::numbers::ln2) < 1e-12, "cbce(1, 0.5, 2) != 2 ln 2");

  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 2.0);
  std::uniform_real_distribution<double> a(0.5, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd z(kNumSubclasses);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = d(rng);
    const auto label = LabelVector::from_mask(static_cast<std::uint8_t>(1 + rng() % 255));
    LossWeights w;
    for (auto& x : w.subclass) x = a(rng);
    for (auto& x : w.master) x = a(rng);
    NestedLossOptions opts;
    opts.cbce_ratio = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    opts.mixer = static_cast<MasterMixer>(trial % 3);
    const auto l = nested_loss(z, label, w, opts);

    // independent recomposition from cbce and master_logits
    double sub = 0.0;
    for (int i = 0; i < kNumSubclasses; ++i) {
      sub += cbce(label.sub(i) ? 1.0 : 0.0, sigmoid(z(i)), w.subclass[static_cast<std::size_t>(i)]);
    }
    sub /= kNumSubclasses;
    const auto m = master_logits(z, opts.mixer);
    double mas = 0.0;
    for (int k = 0; k < kNumMasters; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      mas += cbce(label.master(k) ? 1.0 : 0.0, sigmoid(m.values[kk]), w.master[kk]);
    }
    mas /= kNumMasters;
    const double r = opts.cbce_ratio;
    o.require(std::abs(l.total - ((1.0 - r) * l.master + r * l.subclass)) < 1e-12, "total is not the blend");
    o.require(std::abs(l.subclass - sub) < 1e-12 && std::abs(l.master - mas) < 1e-12, "terms disagree with cbce");

    for (int master : {0, 2}) {
      const auto idx = members_of(master);
      std::array<int, 3> perm{0, 1, 2};
      int count = 0;
      do {
        Eigen::VectorXd p = z;
        for (std::size_t k = 0; k < 3; ++k) {
          p(idx[k]) = z(idx[static_cast<std::size_t>(perm[k])]);
        }
        const auto pm = master_logits(p, opts.mixer);
        o.require(pm.values == m.values, "master logits change under a permutation");
        ++count;
      } while (std::next_permutation(perm.begin(), perm.end()));
      o.require(count == 6, "expected 3! permutations");
    }
  }
  if (o.pass) o.detail = "cbce examples exact, 200 random blends, 3! permutations per master";
  return o;
}

Outcome dsp_identities() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t n : {64u, 320u, 512u, 1024u}) {
    const auto xf = test::noise(n, 0.4, n);
    const std::vector<double> x(xf.begin(), xf.end());
    double energy = 0.0;
    for (double v : x) energy += v * v;
    const std::size_t nfft = dsp::next_pow2(n);
    const double rel = std::abs(dsp::two_sided_sum(dsp::power_spectrum(x, nfft), nfft) / nfft - energy) / energy;
    worst = std::max(worst, rel);
  }
  o.require(worst < 1e-9, fmt("Parseval rel err %.2e", worst));

  for (double c : {-3.0, 0.0, 1.5, 7.25}) {
    const std::vector<double> energies(40, c);
    const auto l = dct(energies, 40, DctKind::Unnormalized);
    o.require(std::abs(l[0] - 40.0 * c) < 1e-9, fmt("L_0 = %.6f for c = %.2f", l[0], c));
    for (std::size_t j = 1; j < l.size(); ++j) o.require(std::abs(l[j]) < 1e-9, fmt("L_j = %.3e", l[j]));
  }

  o.require(mel_scale(0.0) == 0.0, "mel_scale(0) != 0");
  const double m100 = mel_scale(100.0);
  o.require(std::abs(m100 - 781.18) < 0.01, fmt("mel_scale(100) = %.4f", m100));

  const auto clip = test::clip_of(test::sine(440.0, 1.0));
  const auto frames = frame(clip, 20.0, 10.0);
  const auto fused = fuse_cepstral(mfcc(frames), lfcc(frames));
  o.require(fused.values.cols() == 80, "fused width is not 80");
  if (o.pass) o.detail = fmt("Parseval %.1e, mel(100) = %.4f, fused width 80", worst, m100);
  return o;
}

// Noise through an all-pole filter with one conjugate pole pair per frequency.
std::vector<float> resonant(std::initializer_list<double> freqs, double radius, std::size_t n, std::uint64_t seed) {
  std::vector<double> a{1.0};
  for (double f : freqs) {
    const double th = 2.0 * std::numbers::pi * f / kSampleRate;
    const std::array<double, 3> pair{1.0, -2.0 * radius * std::cos(th), radius * radius};
    std::vector<double> next(a.size() + 2, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) next[i + j] += a[i] * pair[j];
    }
    a = next;
  }
  const auto e = test::noise(n, 0.01, seed);
  std::vector<double> y(n, 0.0);
  double peak = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double v = e[t];
    for (std::size_t k = 1; k < a.size() && k <= t; ++k) v -= a[k] * y[t - k];
    y[t] = v;
    peak = std::max(peak, std::abs(v));
  }
  std::vector<float> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = static_cast<float>(0.5 * y[t] / peak);
  return out;
}

Outcome signal_recovery() {
  Outcome o;
  const double p = pitch(test::sine(200.0, 0.1), kSampleRate, 50.0, 2000.0);
  o.require(std::abs(p - 200.0) <= 2.0, fmt("pitch %.2f Hz", p));

  double worst_formant = 0.0;
  for (auto [f1, f2] : {std::pair{800.0, 2400.0}, std::pair{600.0, 1800.0}, std::pair{1000.0, 3000.0}}) {
    const auto f = formants(resonant({f1, f2}, 0.98, 4000, 12), kSampleRate);
    worst_formant = std::max({worst_formant, std::abs(f[0] - f1) / f1, std::abs(f[1] - f2) / f2});
  }
  o.require(worst_formant < 0.10, fmt("formant rel err %.3f", worst_formant));

  double worst_iou = 1.0;
  const std::vector<std::vector<std::pair<double, double>>> layouts = {
      {{0.5, 1.0}}, {{0.3, 0.6}, {1.0, 1.4}}, {{0.2, 0.35}, {0.8, 1.1}, {1.5, 1.9}}};
  for (std::size_t li = 0; li < layouts.size(); ++li) {
    const auto& spans = layouts[li];
    auto x = test::noise(2 * kSampleRate, 0.01, 40 + li);
    const auto tone = test::sine(600.0, 2.0, 0.5);
    for (auto [a, b] : spans) {
      for (auto n = static_cast<std::size_t>(a * kSampleRate); n < static_cast<std::size_t>(b * kSampleRate); ++n) {
        x[n] += tone[n];
      }
    }
    const auto segs = segment_syllables(test::clip_of(x));
    o.require(segs.size() == spans.size(), "wrong number of syllables in layout " + std::to_string(li));
    for (std::size_t i = 0; i < std::min(segs.size(), spans.size()); ++i) {
      const auto [a, b] = spans[i];
      const double inter = std::max(0.0, std::min(b, segs[i].end_s) - std::max(a, segs[i].start_s));
      worst_iou = std::min(worst_iou, inter / (std::max(b, segs[i].end_s) - std::min(a, segs[i].start_s)));
    }
  }
  o.require(worst_iou >= 0.8, fmt("VAD IoU %.3f", worst_iou));
  if (o.pass) o.detail = fmt("pitch %.2f Hz, formant err %.3f, min IoU %.3f", p, worst_formant, worst_iou);
  return o;
}

Outcome confusion_counts() {
  Outcome o;
  const MasterCounts counts = {{{490, 0, 20, 0}, {0, 177, 0, 0}, {70, 30, 570, 20}, {10, 0, 40, 216}}};
  const auto r = confusion_from_counts(counts);
  const std::array<long, 4> precision{86, 86, 90, 92}, recall{96, 100, 83, 81};
  for (std::size_t m = 0; m < 4; ++m) {
    o.require(std::lround(100.0 * r.precision[m]) == precision[m], "precision of " + std::string(master_name(static_cast<int>(m))));
    o.require(std::lround(100.0 * r.recall[m]) == recall[m], "recall of " + std::string(master_name(static_cast<int>(m))));
  }
  if (o.pass) o.detail = "precision [86 86 90 92], recall [96 100 83 81]";
  return o;
}

Outcome protocol() {
  Outcome o;
  std::mt19937_64 rng(99);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::vector<int> classes;
    for (int c = 0; c < kNumSubclasses; ++c) classes.insert(classes.end(), 12 + static_cast<int>(rng() % 40), c);
    std::shuffle(classes.begin(), classes.end(), rng);
    const double frac = 0.2;
    const int k = 10;
    const auto plan = make_split(classes, frac, k, seed);

    std::vector<int> seen(classes.size(), 0);
    for (auto i : plan.test) ++seen[i];
    for (const auto& f : plan.folds) {
      for (auto i : f) ++seen[i];
    }
    o.require(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }),
              "split is not a partition for seed " + std::to_string(seed));

    std::array<int, kNumSubclasses> total{}, test{};
    for (int c : classes) ++total[static_cast<std::size_t>(c)];
    for (auto i : plan.test) ++test[static_cast<std::size_t>(classes[i])];
    for (std::size_t c = 0; c < total.size(); ++c) {
      o.require(std::abs(test[c] - frac * total[c]) <= 1.0, "test stratum off by more than one");
      std::vector<int> per_fold;
      for (const auto& f : plan.folds) {
        per_fold.push_back(static_cast<int>(std::count_if(f.begin(), f.end(), [&](std::size_t i) {
          return static_cast<std::size_t>(classes[i]) == c;
        })));
      }
      const double ideal = static_cast<double>(total[c] - test[c]) / k;
      for (int n : per_fold) o.require(std::abs(n - ideal) <= 1.0, "fold stratum off by more than one");
    }
  }

  std::uniform_int_distribution<int> mask(0, 255);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabelMask> a, b, disjoint;
    for (int i = 0; i < 20; ++i) {
      const auto m = static_cast<LabelMask>(1 + mask(rng) % 255);
      a.push_back(m);
      b.push_back(static_cast<LabelMask>(mask(rng)));
      disjoint.push_back(static_cast<LabelMask>(~m));
    }
    o.require(sample_f1(a, a) == 1.0, "identity F1 != 1");
    o.require(sample_f1(disjoint, a) == 0.0, "disjoint F1 != 0");
    std::vector<std::size_t> order(a.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<LabelMask> pa, pb;
    for (auto i : order) {
      pa.push_back(a[i]);
      pb.push_back(b[i]);
    }
    o.require(std::abs(sample_f1(pb, pa) - sample_f1(b, a)) < 1e-12, "F1 depends on sample order");
  }
  if (o.pass) o.detail = "100 split seeds, 100 F1 trials";
  return o;
}

RunConfig desk_config() {
  return RunConfig::parse(
      "model.hidden_size=16\n"
      "model.boom_dim=64\n"
      "train.optimizer=adam\n"
      "train.learning_rate=0.01\n"
      "train.epochs=50\n"
      "train.seed=1\n"
      "grid.seeds=10\n");
}

Outcome end_to_end() {
  Outcome o;
  const auto dir = test::scratch("acceptance_synth");
  std::filesystem::remove_all(dir);
  generate_dataset(dir, 20, 2024);
  const auto manifest = dir / "manifest.tsv";
  const RunConfig cfg = desk_config();
  const auto train_clips = extract_manifest(manifest, cfg.features, "train");
  const auto test_clips = extract_manifest(manifest, cfg.features, "test");
  o.require(train_clips.size() + test_clips.size() == 160, "clips without syllables in the synthetic set");

  auto fit = [&](FeatureSet set, double& train_f1, double& test_f1) {
    const auto tr = make_samples(train_clips, set);
    const auto te = make_samples(test_clips, set);
    const auto res = train(tr, {}, cfg.train, cfg.model_for(set));
    train_f1 = evaluate_f1(res.params, tr);
    test_f1 = evaluate_f1(res.params, te);
  };
  double tc_train = 0, tc_test = 0, t_train = 0, t_test = 0;
  fit(FeatureSet::ThreeChannel, tc_train, tc_test);
  fit(FeatureSet::Time, t_train, t_test);
  o.require(tc_train >= 0.95, fmt("three-channel train F1 %.3f", tc_train));
  o.require(tc_test >= 0.80, fmt("three-channel held-out F1 %.3f", tc_test));
  o.require(t_test < tc_test, fmt("time-only %.3f not below three-channel %.3f", t_test, tc_test));

  std::vector<MultiChannelFeatures> all = train_clips;
  all.insert(all.end(), test_clips.begin(), test_clips.end());
  const std::array<FeatureSet, 1> sets{FeatureSet::ThreeChannel};
  const auto grid = run_grid(all, cfg, sets);
  const auto& sh = grid.cell(FeatureSet::ThreeChannel, GridModel::Sharnn).f1;
  const auto& gm = grid.cell(FeatureSet::ThreeChannel, GridModel::Gmm).f1;
  const auto& cs = grid.cell(FeatureSet::ThreeChannel, GridModel::Cascade).f1;
  int first = 0;
  for (std::size_t i = 0; i < sh.size(); ++i) first += sh[i] >= gm[i] && sh[i] >= cs[i];
  o.require(first >= 8, "three-channel ranks first in only " + std::to_string(first) + "/10 seeds");
  std::printf("%s", grid.to_text().c_str());
  o.detail = fmt("train %.3f, held-out %.3f, time-only %.3f", tc_train, tc_test, t_test) +
             ", first in " + std::to_string(first) + "/10 seeds" + (o.pass ? "" : ": " + o.detail);
  return o;
}

Outcome em_monotone() {
  Outcome o;
  std::size_t steps = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const int dim = 1 + static_cast<int>(rng() % 6);
    const int n = 30 + static_cast<int>(rng() % 120);
    const int centers = 1 + static_cast<int>(rng() % 4);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<Eigen::VectorXd> data;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x(dim);
      for (int j = 0; j < dim; ++j) x(j) = d(rng) * (1.0 + j % 3) + 4.0 * ((i % centers) == j % centers);
      data.push_back(x);
    }
    GmmOptions opts;
    opts.components = 1 + static_cast<int>(rng() % 5);
    opts.seed = seed;
    const auto fit = gmm_fit(data, opts);
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
      const double prev = fit.log_likelihood[i - 1];
      o.require(fit.log_likelihood[i] >= prev - 1e-9 * std::abs(prev),
                fmt("dataset %.0f: log-likelihood fell at iteration %.0f", static_cast<double>(seed), static_cast<double>(i)));
    }
    steps += fit.log_likelihood.size();
  }
  if (o.pass) o.detail = "50 datasets, " + std::to_string(steps) + " EM iterations";
  return o;
}

Outcome determinism() {
  Outcome o;
  const auto root = test::scratch("acceptance_det");
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);

  generate_dataset(root / "a", 2, 77);
  generate_dataset(root / "b", 2, 77);
  for (const auto& e : read_manifest(root / "a" / "manifest.tsv")) {
    o.require(slurp(root / "a" / e.path) == slurp(root / "b" / e.path), "synthetic clip differs: " + e.path.string());
  }

  RunConfig cfg = desk_config();
  cfg.model.hidden_size = 8;
  cfg.model.boom_dim = 16;
  cfg.train.epochs = 3;
  const auto clips = extract_manifest(root / "a" / "manifest.tsv", cfg.features);
  write_feature_cache(root / "a.hvfc", clips);
  write_feature_cache(root / "b.hvfc", extract_manifest(root / "b" / "manifest.tsv", cfg.features));
  o.require(slurp(root / "a.hvfc") == slurp(root / "b.hvfc"), "feature caches differ");

  const auto back = read_feature_cache(root / "a.hvfc");
  o.require(back.size() == clips.size(), "feature cache lost clips");
  for (std::size_t i = 0; i < std::min(back.size(), clips.size()); ++i) {
    auto same = [](const FeatureMatrix& x, const FeatureMatrix& y) {
      return x.rows() == y.rows() && x.cols() == y.cols() &&
             std::memcmp(x.data(), y.data(), static_cast<std::size_t>(x.size()) * sizeof(float)) == 0;
    };
    o.require(back[i].clip_id == clips[i].clip_id && back[i].label == clips[i].label &&
                  same(back[i].time, clips[i].time) && same(back[i].spectral, clips[i].spectral) &&
                  same(back[i].cepstral, clips[i].cepstral),
              "feature cache round-trip differs at " + clips[i].clip_id);
  }

  const auto samples = make_samples(clips, FeatureSet::ThreeChannel);
  for (const char* tag : {"r1", "r2"}) {
    const auto res = train(samples, {}, cfg.train, cfg.model_for(FeatureSet::ThreeChannel));
    save_model(root / (std::string(tag) + ".hvck"), res.params);
    write_history(root / (std::string(tag) + ".hist"), res.history);
    std::ofstream(root / (std::string(tag) + ".report")) << evaluate(res.params, samples).to_text();
  }
  for (const char* ext : {".hvck", ".hist", ".report"}) {
    o.require(slurp(root / (std::string("r1") + ext)) == slurp(root / (std::string("r2") + ext)),
              std::string("fixed-seed runs differ in ") + ext);
  }
  const auto loaded = load_model(root / "r1.hvck");
  save_model(root / "r3.hvck", loaded);
  o.require(slurp(root / "r1.hvck") == slurp(root / "r3.hvck"), "checkpoint reload is not bit-exact");
  for (const auto& s : samples) {
    const auto a = predict(loaded, s.inputs).logits;
    o.require(a == predict(load_model(root / "r3.hvck"), s.inputs).logits, "reloaded logits differ");
    break;
  }

  auto wav = generate_clip(recipe_for(3), 5).clip;
  write_wav(root / "rt.wav", wav);
  const auto rt = load_wav(root / "rt.wav");
  o.require(rt.samples.size() == wav.samples.size() &&
                std::memcmp(rt.samples.data(), wav.samples.data(), wav.samples.size() * sizeof(float)) == 0,
            "WAV round-trip is not bit-exact");

  GmmClassifier gmm;
  std::vector<Eigen::VectorXd> vs;
  std::vector<LabelVector> ls;
  for (const auto& c : clips) {
    vs.push_back(summary_vector(c, FeatureSet::Time));
    ls.push_back(*c.label);
  }
  GmmOptions go;
  go.components = 1;
  gmm.fit(vs, ls, go);
  write_checkpoint(root / "g1.hvck", gmm.to_checkpoint());
  write_checkpoint(root / "g2.hvck", GmmClassifier::from_checkpoint(read_checkpoint(root / "g1.hvck")).to_checkpoint());
  o.require(slurp(root / "g1.hvck") == slurp(root / "g2.hvck"), "GMM checkpoint round-trip differs");
  if (o.pass) o.detail = "synth, caches, checkpoints, histories and reports byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},     {"loss algebra", loss_algebra},
      {"DSP identities", dsp_identities},      {"signal recovery", signal_recovery},
      {"confusion-count regression", confusion_counts},         {"protocol invariants", protocol},
      {"end-to-end synthetic", end_to_end},    {"EM monotonicity", em_monotone},
      {"determinism and round-trips", determinism},
  };
  const std::array<double, 9> budget_s = {60, 0, 10, 30, 0, 0, 900, 0, 0};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s[i] > 0 && secs >= budget_s[i]) {
      o.pass = false;
      o.detail += fmt(" (over the %.0f s budget)", budget_s[i]);
    }
    failed += !o.pass;
    std::printf("criterion %zu %s: %s  [%s] %.1f s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
