#include <doctest.h>

#include <algorithm>
#include <cstring>

#include "henvox/dsp.hpp"
#include "henvox/error.hpp"
#include "henvox/feature_cache.hpp"
#include "henvox/features.hpp"
#include "support.hpp"

using namespace hv;

namespace {

// Noise through a two-resonance all-pole filter.
std::vector<float> resonant(std::initializer_list<double> freqs, double radius, std::size_t n, std::uint64_t seed) {
  std::vector<double> a{1.0};
  for (double f : freqs) {
    const double th = 2.0 * std::numbers::pi * f / kSampleRate;
    const std::vector<double> pair{1.0, -2.0 * radius * std::cos(th), radius * radius};
    std::vector<double> next(a.size() + 2, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) next[i + j] += a[i] * pair[j];
    }
    a = next;
  }
  const auto e = test::noise(n, 0.01, seed);
  std::vector<double> y(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double v = e[t];
    for (std::size_t k = 1; k < a.size() && k <= t; ++k) v -= a[k] * y[t - k];
    y[t] = v;
  }
  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  std::vector<float> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = static_cast<float>(0.5 * y[t] / peak);
  return out;
}

SyllableSegment seg_of(std::vector<float> x, double start = 0.0) {
  SyllableSegment s;
  s.start_s = start;
  s.end_s = start + static_cast<double>(x.size()) / kSampleRate;
  s.samples = std::move(x);
  return s;
}

}  // namespace

TEST_CASE("mel scale with divisor 100") {
  CHECK(mel_scale(0.0) == 0.0);
  CHECK(mel_scale(100.0, 100.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(mel_scale(100.0, 100.0) == doctest::Approx(781.18).epsilon(1e-5));
  CHECK(mel_scale(700.0, 700.0) == doctest::Approx(781.18).epsilon(1e-5));
  CHECK(inverse_mel_scale(mel_scale(1234.5)) == doctest::Approx(1234.5));
  CHECK_THROWS_AS(mel_scale(-1.0), Error);
}

TEST_CASE("triangular filterbank shape and peaks") {
  for (auto scale : {FilterScale::Mel, FilterScale::Linear}) {
    const auto fb = triangular_filterbank(40, 512, kSampleRate, scale);
    CHECK(fb.rows() == 40);
    CHECK(fb.cols() == 257);
    for (Eigen::Index r = 0; r < fb.rows(); ++r) {
      CHECK(fb.row(r).maxCoeff() == 1.0);
      CHECK(fb.row(r).minCoeff() >= 0.0);
    }
  }
  const auto lin = triangular_filterbank(40, 512, kSampleRate, FilterScale::Linear);
  Eigen::Index first = 0, last = 0;
  lin.row(0).maxCoeff(&first);
  lin.row(39).maxCoeff(&last);
  for (Eigen::Index k = first + 1; k < last; ++k) CHECK(lin.col(k).sum() > 0.0);
  // linear peak unique
  for (Eigen::Index r = 0; r < lin.rows(); ++r) CHECK((lin.row(r).array() == 1.0).count() == 1);
}

TEST_CASE("unnormalized cosine sum") {
  const std::vector<double> c(40, 2.5);
  const auto l = dct(c, 40, DctKind::Unnormalized);
  CHECK(l[0] == doctest::Approx(100.0));
  for (std::size_t j = 1; j < 40; ++j) CHECK(std::abs(l[j]) < 1e-9);

  const auto b = dct(std::vector<double>{1, 0, 0, 0}, 4, DctKind::Unnormalized);
  CHECK(b[1] == doctest::Approx(std::cos(std::numbers::pi / 8)));
  CHECK(b[1] == doctest::Approx(0.9239).epsilon(1e-4));
}

TEST_CASE("orthonormal DCT is a scaled cosine sum") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  std::vector<double> x(40);
  for (auto& v : x) v = d(rng);
  const auto u = dct(x, 40, DctKind::Unnormalized);
  const auto o = dct(x, 40, DctKind::Orthonormal);
  CHECK(o[0] == doctest::Approx(u[0] * std::sqrt(1.0 / 40)));
  for (std::size_t j = 1; j < 40; ++j) CHECK(o[j] == doctest::Approx(u[j] * std::sqrt(2.0 / 40)));
  double ex = 0.0, eo = 0.0;
  for (std::size_t j = 0; j < 40; ++j) {
    ex += x[j] * x[j];
    eo += o[j] * o[j];
  }
  CHECK(eo == doctest::Approx(ex));
}

TEST_CASE("mfcc of silence is the transform of the log floor") {
  const auto fs = frame(test::clip_of(std::vector<float>(3200, 0.0f)), 20.0, 10.0);
  const auto m = mfcc(fs);
  CHECK(m.values.cols() == 40);
  for (Eigen::Index t = 0; t < m.values.rows(); ++t) {
    CHECK(m.values(t, 0) == doctest::Approx(40.0 * std::log(1e-10) / std::sqrt(40.0)));
    for (Eigen::Index j = 1; j < 40; ++j) CHECK(std::abs(m.values(t, j)) < 1e-9);
  }
}

TEST_CASE("amplitude scaling only moves the first cepstral coefficient") {
  const auto x = test::noise(4800, 0.2, 8);
  auto y = x;
  for (auto& v : y) v *= 0.5f;
  const auto a = mfcc(frame(test::clip_of(x), 20.0, 10.0));
  const auto b = mfcc(frame(test::clip_of(y), 20.0, 10.0));
  const double shift = a.values(0, 0) - b.values(0, 0);
  CHECK(shift > 0.0);
  for (Eigen::Index t = 0; t < a.values.rows(); ++t) {
    CHECK(a.values(t, 0) - b.values(t, 0) == doctest::Approx(shift).epsilon(1e-6));
    for (Eigen::Index j = 1; j < 40; ++j) CHECK(a.values(t, j) == doctest::Approx(b.values(t, j)).epsilon(1e-6));
  }
}

TEST_CASE("mfcc and lfcc share one pipeline") {
  const auto fs = frame(test::clip_of(test::noise(1600, 0.3, 2)), 20.0, 10.0);
  const auto fb = triangular_filterbank(40, 512, kSampleRate, FilterScale::Linear);
  const auto l = lfcc(fs);
  const auto forced = cepstrum(fs, fb, 512, 40, DctKind::Unnormalized);
  CHECK(l.values == forced);
  const auto ortho = cepstrum(fs, fb, 512, 40, DctKind::Orthonormal);
  CHECK(ortho(0, 3) == doctest::Approx(forced(0, 3) * std::sqrt(2.0 / 40)));
}

TEST_CASE("cepstral fusion") {
  const auto fs = frame(test::clip_of(test::noise(16160, 0.3, 3)), 20.0, 10.0);
  const auto m = mfcc(fs);
  const auto l = lfcc(fs);
  REQUIRE(m.values.rows() == 100);
  const auto f = fuse_cepstral(m, l);
  CHECK(f.kind == CepstralKind::Fused);
  CHECK(f.values.cols() == 80);
  CHECK(f.values.rows() == 100);
  CHECK(f.values.leftCols(40) == m.values);
  CHECK(f.values.rightCols(40) == l.values);
  CepstralMatrix short_l = l;
  short_l.values = l.values.topRows(99);
  try {
    fuse_cepstral(m, short_l);
    FAIL("expected FrameCountMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FrameCountMismatch);
  }
}

TEST_CASE("spectral energy") {
  const auto x = test::noise(1024, 0.3, 4);
  double energy = 0.0;
  for (float v : x) energy += static_cast<double>(v) * v;
  const auto se = spectral_energy(x);
  CHECK(se.nfft == 1024);
  CHECK(std::abs(dsp::two_sided_sum(se.bins, se.nfft) / 1024.0 - energy) / energy < 1e-9);

  const auto tone = spectral_energy(test::sine(1000.0, 0.064));
  const auto peak = std::max_element(tone.bins.begin(), tone.bins.end()) - tone.bins.begin();
  const double bin_hz = static_cast<double>(kSampleRate) / static_cast<double>(tone.nfft);
  CHECK(std::abs(static_cast<double>(peak) * bin_hz - 1000.0) <= bin_hz);

  const auto zero = spectral_energy(std::vector<float>(100, 0.0f));
  CHECK(zero.nfft == 128);
  for (double b : zero.bins) CHECK(b == 0.0);
  CHECK(zero.log_total == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("pitch") {
  CHECK(std::abs(pitch(test::sine(200.0, 0.1), kSampleRate, 50.0, 2000.0) - 200.0) <= 2.0);
  CHECK(pitch(test::noise(1600, 0.3, 6), kSampleRate, 50.0, 2000.0) == 0.0);
  const auto loud = test::sine(400.0, 0.1, 0.9);
  const auto quiet = test::sine(400.0, 0.1, 0.09);
  const double p = pitch(loud, kSampleRate, 50.0, 2000.0);
  CHECK(std::abs(p - 400.0) <= 2.0);
  CHECK(pitch(quiet, kSampleRate, 50.0, 2000.0) == doctest::Approx(p).epsilon(1e-6));
  CHECK_THROWS_AS(pitch(test::sine(200.0, 0.01), kSampleRate, 50.0, 2000.0), Error);
}

TEST_CASE("formants of a constructed two-resonance signal") {
  const auto x = resonant({800.0, 2400.0}, 0.98, 4000, 12);
  const auto f = formants(x, kSampleRate);
  CHECK(std::abs(f[0] - 800.0) / 800.0 < 0.10);
  CHECK(std::abs(f[1] - 2400.0) / 2400.0 < 0.10);
  for (std::size_t i = 1; i < 4; ++i) {
    if (f[i] != 0.0) CHECK(f[i - 1] < f[i]);
  }
  auto scaled = x;
  for (auto& v : scaled) v *= 0.1f;
  const auto g = formants(scaled, kSampleRate);
  for (std::size_t i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(f[i]).epsilon(1e-3));
}

TEST_CASE("formants of noise are sorted with zero fill") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = formants(test::noise(2000, 0.3, seed), kSampleRate);
    bool seen_zero = false;
    for (std::size_t i = 0; i < 4; ++i) {
      if (f[i] == 0.0) {
        seen_zero = true;
      } else {
        CHECK_FALSE(seen_zero);
        CHECK(f[i] < kSampleRate / 2.0);
        if (i > 0) CHECK(f[i - 1] < f[i]);
      }
    }
  }
  CHECK_THROWS_AS(formants(std::vector<float>(20, 0.1f), kSampleRate), Error);
}

TEST_CASE("time features") {
  AudioClip clip = test::clip_of(std::vector<float>(40000, 0.0f));  // 2.5 s
  std::vector<SyllableSegment> syl;
  for (int i = 0; i < 5; ++i) syl.push_back(seg_of(std::vector<float>(160, 0.5f), 0.1 + 0.4 * i));
  const auto tf = time_features(clip, syl);
  REQUIRE(tf.rows() == 5);
  REQUIRE(tf.cols() == 5);
  for (Eigen::Index r = 0; r < 5; ++r) {
    CHECK(tf(r, 0) == doctest::Approx(2.0));
    CHECK(tf(r, 1) == doctest::Approx(40.0));
    CHECK(tf(r, 2) == doctest::Approx(93.98).epsilon(1e-4));
    CHECK(tf(r, 3) == doctest::Approx(0.25));
  }
  const auto zero = time_features(clip, {seg_of(std::vector<float>(160, 0.0f))});
  CHECK(zero(0, 1) == 0.0f);
  CHECK(zero(0, 3) == 0.0f);
  CHECK(zero(0, 2) == doctest::Approx(0.0));
  CHECK(time_features(clip, {}).rows() == 0);
}

TEST_CASE("energy is additive over concatenation") {
  const auto a = test::noise(700, 0.2, 1);
  const auto b = test::noise(900, 0.3, 2);
  auto ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const AudioClip clip = test::clip_of(std::vector<float>(16000, 0.0f));
  const auto ea = time_features(clip, {seg_of(a)})(0, 1);
  const auto eb = time_features(clip, {seg_of(b)})(0, 1);
  const auto eab = time_features(clip, {seg_of(ab)})(0, 1);
  CHECK(eab == doctest::Approx(ea + eb).epsilon(1e-6));
}

TEST_CASE("extract_features produces aligned channels and is deterministic") {
  auto x = test::noise(32000, 0.003, 3);
  const auto tone = test::sine(700.0, 2.0, 0.4);
  for (std::size_t n = 4000; n < 9000; ++n) x[n] += tone[n];
  for (std::size_t n = 16000; n < 22000; ++n) x[n] += tone[n];
  const auto clip = test::clip_of(x);
  const auto f = extract_features(clip);
  CHECK(f.time.rows() == 2);
  CHECK(f.spectral.rows() == f.time.rows());
  CHECK(f.spectral.cols() == 5);
  CHECK(f.cepstral.cols() == 80);
  CHECK(f.cepstral.rows() == 199);
  CHECK(f.time(0, 4) == doctest::Approx(700.0).epsilon(0.01));
  const auto g = extract_features(clip);
  CHECK(f.time == g.time);
  CHECK(f.spectral == g.spectral);
  CHECK(f.cepstral == g.cepstral);
  CHECK(f.cepstral.allFinite());

  const auto silent = extract_features(test::clip_of(std::vector<float>(16000, 0.0f)));
  CHECK_FALSE(silent.has_syllables());
  CHECK(silent.cepstral.cols() == 80);
}

TEST_CASE("feature cache round-trips bit-exactly") {
  std::vector<MultiChannelFeatures> clips(3);
  std::mt19937_64 rng(5);
  std::normal_distribution<float> d;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    auto& c = clips[i];
    c.clip_id = "clip_" + std::to_string(i);
    c.time = FeatureMatrix::NullaryExpr(static_cast<Eigen::Index>(i + 1), 5, [&] { return d(rng); });
    c.spectral = FeatureMatrix::NullaryExpr(static_cast<Eigen::Index>(i + 1), 5, [&] { return d(rng); });
    c.cepstral = FeatureMatrix::NullaryExpr(static_cast<Eigen::Index>(7 * i + 3), 80, [&] { return d(rng); });
    if (i != 1) c.label = LabelVector::from_indices({static_cast<int>(i), 2});
  }
  const auto path = test::scratch("cache.hvfc");
  write_feature_cache(path, clips);
  const auto back = read_feature_cache(path);
  REQUIRE(back.size() == clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    CHECK(back[i].clip_id == clips[i].clip_id);
    CHECK(back[i].time == clips[i].time);
    CHECK(back[i].spectral == clips[i].spectral);
    CHECK(back[i].cepstral == clips[i].cepstral);
    CHECK(back[i].label == clips[i].label);
  }
  std::ofstream(test::scratch("bad.hvfc"), std::ios::binary) << "HVFX1";
  CHECK_THROWS_AS(read_feature_cache(test::scratch("bad.hvfc")), Error);
}
