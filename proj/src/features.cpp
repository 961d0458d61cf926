#include "henvox/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "henvox/dsp.hpp"
#include "henvox/error.hpp"

namespace hv {

namespace {

constexpr double kLogFloor = 1e-10;
constexpr double kIntensityRef = 1e-10;
constexpr double kVoicingThreshold = 0.3;
// Candidate lags whose correlation is within this fraction of the best are
// preferred when shorter, which avoids reporting a multiple of the period.
constexpr double kOctaveGuard = 0.95;

std::vector<double> to_double(std::span<const float> x) { return {x.begin(), x.end()}; }

double scale_of(double hz, FilterScale scale, double divisor) {
  return scale == FilterScale::Mel ? mel_scale(hz, divisor) : hz;
}

double unscale(double v, FilterScale scale, double divisor) {
  return scale == FilterScale::Mel ? inverse_mel_scale(v, divisor) : v;
}

}  // namespace

void FeatureOptions::validate() const {
  if (mel_divisor <= 0.0) throw Error(ErrorKind::InvalidConfig, "mel divisor must be positive");
  if (nfft < 64 || (nfft & (nfft - 1)) != 0) {
    throw Error(ErrorKind::InvalidConfig, "nfft must be a power of two >= 64");
  }
  if (num_filters < 1 || num_coeffs < 1 || num_coeffs > num_filters) {
    throw Error(ErrorKind::InvalidConfig, "need 1 <= num_coeffs <= num_filters");
  }
  if (!(pitch_min_hz > 0.0 && pitch_min_hz < pitch_max_hz && pitch_max_hz < kSampleRate / 2.0)) {
    throw Error(ErrorKind::InvalidConfig, "pitch range must satisfy 0 < min < max < sr/2");
  }
  if (lpc_order < 4) throw Error(ErrorKind::InvalidConfig, "LPC order must be >= 4");
  if (samples_for_ms(frame_ms, kSampleRate) > nfft) {
    throw Error(ErrorKind::InvalidConfig, "nfft must cover one frame");
  }
  vad.validate();
}

double mel_scale(double hz, double divisor) {
  if (hz < 0.0) throw Error(ErrorKind::NegativeFrequency, std::to_string(hz) + " Hz");
  return 2595.0 * std::log10(hz / divisor + 1.0);
}

double inverse_mel_scale(double mel, double divisor) {
  return divisor * (std::pow(10.0, mel / 2595.0) - 1.0);
}

RowMatrix triangular_filterbank(int num_filters, std::size_t nfft, int sample_rate,
                                FilterScale scale, double mel_divisor) {
  const auto bins = static_cast<Eigen::Index>(nfft / 2 + 1);
  RowMatrix fb = RowMatrix::Zero(num_filters, bins);
  const double top = scale_of(sample_rate / 2.0, scale, mel_divisor);
  std::vector<double> edges(static_cast<std::size_t>(num_filters) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = unscale(top * static_cast<double>(i) / static_cast<double>(num_filters + 1), scale,
                       mel_divisor);
  }
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(nfft);
  for (int m = 0; m < num_filters; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double centre = edges[static_cast<std::size_t>(m) + 1];
    const double right = edges[static_cast<std::size_t>(m) + 2];
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > left && f <= centre) {
        w = (f - left) / (centre - left);
      } else if (f > centre && f < right) {
        w = (right - f) / (right - centre);
      }
      fb(m, k) = w;
    }
    const double peak = fb.row(m).maxCoeff();
    if (peak > 0.0) {
      fb.row(m) /= peak;
    } else {
      const auto nearest = static_cast<Eigen::Index>(std::lround(centre / bin_hz));
      fb(m, std::min(nearest, bins - 1)) = 1.0;
    }
  }
  return fb;
}

std::vector<double> dct(std::span<const double> x, int num_coeffs, DctKind kind) {
  const auto b = static_cast<double>(x.size());
  std::vector<double> out(static_cast<std::size_t>(num_coeffs));
  for (int j = 0; j < num_coeffs; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      // i is zero-based here, so (i + 1/2) matches the one-based (i - 1/2).
      acc += x[i] * std::cos(j * (static_cast<double>(i) + 0.5) * std::numbers::pi / b);
    }
    if (kind == DctKind::Orthonormal) {
      acc *= j == 0 ? std::sqrt(1.0 / b) : std::sqrt(2.0 / b);
    }
    out[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

RowMatrix cepstrum(const FrameSequence& frames, const RowMatrix& filterbank, std::size_t nfft,
                   int num_coeffs, DctKind kind) {
  RowMatrix out(frames.frames.rows(), num_coeffs);
  std::vector<double> buf(frames.frame_len());
  std::vector<double> log_e(static_cast<std::size_t>(filterbank.rows()));
  for (Eigen::Index t = 0; t < frames.frames.rows(); ++t) {
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = frames.frames(t, static_cast<Eigen::Index>(k));
    const auto p = dsp::power_spectrum(buf, nfft);
    const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
    const Eigen::VectorXd energies = filterbank * pv;
    for (Eigen::Index m = 0; m < energies.size(); ++m) {
      log_e[static_cast<std::size_t>(m)] = std::log(std::max(energies(m), kLogFloor));
    }
    const auto c = dct(log_e, num_coeffs, kind);
    for (int j = 0; j < num_coeffs; ++j) out(t, j) = c[static_cast<std::size_t>(j)];
  }
  return out;
}

CepstralMatrix mfcc(const FrameSequence& frames, const FeatureOptions& opts) {
  const auto fb = triangular_filterbank(opts.num_filters, opts.nfft, frames.sample_rate,
                                        FilterScale::Mel, opts.mel_divisor);
  return {cepstrum(frames, fb, opts.nfft, opts.num_coeffs, DctKind::Orthonormal), CepstralKind::MFCC};
}

CepstralMatrix lfcc(const FrameSequence& frames, const FeatureOptions& opts) {
  const auto fb = triangular_filterbank(opts.num_filters, opts.nfft, frames.sample_rate,
                                        FilterScale::Linear, opts.mel_divisor);
  return {cepstrum(frames, fb, opts.nfft, opts.num_coeffs, DctKind::Unnormalized), CepstralKind::LFCC};
}

CepstralMatrix fuse_cepstral(const CepstralMatrix& m, const CepstralMatrix& l) {
  if (m.values.rows() != l.values.rows()) {
    throw Error(ErrorKind::FrameCountMismatch,
                std::to_string(m.values.rows()) + " vs " + std::to_string(l.values.rows()) + " frames");
  }
  CepstralMatrix out;
  out.kind = CepstralKind::Fused;
  out.values.resize(m.values.rows(), m.values.cols() + l.values.cols());
  out.values << m.values, l.values;
  return out;
}

SpectralEnergy spectral_energy(std::span<const float> segment) {
  SpectralEnergy se;
  se.nfft = dsp::next_pow2(std::max<std::size_t>(segment.size(), 2));
  se.bins = dsp::power_spectrum(to_double(segment), se.nfft);
  se.log_total = std::log(dsp::two_sided_sum(se.bins, se.nfft) + kLogFloor);
  return se;
}

double pitch(std::span<const float> segment, int sample_rate, double f_min, double f_max) {
  if (!(f_min > 0.0 && f_min < f_max && f_max < sample_rate / 2.0)) {
    throw Error(ErrorKind::InvalidConfig, "pitch range must satisfy 0 < f_min < f_max < sr/2");
  }
  const auto lag_min = static_cast<std::size_t>(std::ceil(sample_rate / f_max));
  const auto lag_max = static_cast<std::size_t>(std::floor(sample_rate / f_min));
  if (segment.size() < 2 * lag_max) {
    throw Error(ErrorKind::SegmentTooShort, "pitch needs at least " + std::to_string(2 * lag_max) +
                                                " samples, got " + std::to_string(segment.size()));
  }
  const auto x = to_double(segment);
  const std::size_t n = x.size();
  const std::size_t lo = std::max<std::size_t>(1, lag_min - 1);
  const std::size_t hi = lag_max + 1;
  std::vector<double> r(hi + 1, 0.0);
  for (std::size_t lag = lo; lag <= hi; ++lag) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      xy += x[i] * x[i + lag];
      xx += x[i] * x[i];
      yy += x[i + lag] * x[i + lag];
    }
    r[lag] = (xx > 0.0 && yy > 0.0) ? xy / std::sqrt(xx * yy) : 0.0;
  }
  std::vector<std::size_t> peaks;
  double best = -1.0;
  for (std::size_t lag = std::max(lag_min, lo + 1); lag <= lag_max; ++lag) {
    if (r[lag] >= r[lag - 1] && r[lag] > r[lag + 1]) {
      peaks.push_back(lag);
      best = std::max(best, r[lag]);
    }
  }
  if (peaks.empty() || best < kVoicingThreshold) return 0.0;
  std::size_t chosen = peaks.front();
  for (std::size_t lag : peaks) {
    if (r[lag] >= kOctaveGuard * best) {
      chosen = lag;
      break;
    }
  }
  // Parabolic refinement of the peak position.
  const double a = r[chosen - 1], b = r[chosen], c = r[chosen + 1];
  const double denom = a - 2.0 * b + c;
  const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  const double lag = static_cast<double>(chosen) + std::clamp(shift, -0.5, 0.5);
  return sample_rate / lag;
}

std::array<double, 4> formants(std::span<const float> segment, int sample_rate,
                               const FeatureOptions& opts) {
  const auto order = static_cast<std::size_t>(opts.lpc_order);
  if (segment.size() < 2 * order) {
    throw Error(ErrorKind::SegmentTooShort, "LPC needs at least " + std::to_string(2 * order) + " samples");
  }
  const std::size_t n = segment.size();
  std::vector<double> y(n);
  y[0] = segment[0];
  for (std::size_t i = 1; i < n; ++i) y[i] = segment[i] - opts.pre_emphasis * segment[i - 1];
  const auto w = make_window(Window::Hamming, n);
  for (std::size_t i = 0; i < n; ++i) y[i] *= w[i];

  std::vector<double> r(order + 1, 0.0);
  for (std::size_t lag = 0; lag <= order; ++lag) {
    for (std::size_t i = 0; i + lag < n; ++i) r[lag] += y[i] * y[i + lag];
  }

  // Levinson-Durbin recursion for A(z) = 1 + a1 z^-1 + ... + ap z^-p.
  std::vector<double> a(order + 1, 0.0), prev(order + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  for (std::size_t i = 1; i <= order; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    if (!std::isfinite(k)) throw Error(ErrorKind::UnstableLPC, "non-finite reflection coefficient");
    prev = a;
    for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
    if (!(err > 0.0)) break;
  }

  const auto p = static_cast<Eigen::Index>(order);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = -a[static_cast<std::size_t>(j) + 1];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::UnstableLPC, "root finding failed");

  std::vector<double> found;
  const double sr = sample_rate;
  for (Eigen::Index i = 0; i < p; ++i) {
    const std::complex<double> z = solver.eigenvalues()(i);
    if (z.imag() <= 0.0) continue;
    const double freq = std::arg(z) * sr / (2.0 * std::numbers::pi);
    const double bandwidth = -std::log(std::abs(z)) * sr / std::numbers::pi;
    if (bandwidth < opts.max_formant_bandwidth_hz && freq > 0.0 && freq < sr / 2.0) {
      found.push_back(freq);
    }
  }
  std::sort(found.begin(), found.end());
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < out.size() && i < found.size(); ++i) out[i] = found[i];
  return out;
}

FeatureMatrix time_features(const AudioClip& clip, const std::vector<SyllableSegment>& syllables,
                            const FeatureOptions& opts) {
  FeatureMatrix out(static_cast<Eigen::Index>(syllables.size()), kTimeFeatureDim);
  if (syllables.empty()) return out;
  const double tempo = static_cast<double>(syllables.size()) / clip.duration_s();
  for (std::size_t s = 0; s < syllables.size(); ++s) {
    const auto& seg = syllables[s].samples;
    double energy = 0.0;
    for (float v : seg) energy += static_cast<double>(v) * v;
    const double power = seg.empty() ? 0.0 : energy / static_cast<double>(seg.size());
    const double intensity = 10.0 * std::log10(std::max(power, kIntensityRef) / kIntensityRef);
    double f0 = 0.0;
    try {
      f0 = pitch(seg, clip.sample_rate, opts.pitch_min_hz, opts.pitch_max_hz);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SegmentTooShort) throw;
    }
    const auto row = static_cast<Eigen::Index>(s);
    out(row, 0) = static_cast<float>(tempo);
    out(row, 1) = static_cast<float>(energy);
    out(row, 2) = static_cast<float>(intensity);
    out(row, 3) = static_cast<float>(power);
    out(row, 4) = static_cast<float>(f0);
  }
  return out;
}

FeatureMatrix spectral_features(const AudioClip& clip, const std::vector<SyllableSegment>& syllables,
                                const FeatureOptions& opts) {
  FeatureMatrix out(static_cast<Eigen::Index>(syllables.size()), kSpectralFeatureDim);
  for (std::size_t s = 0; s < syllables.size(); ++s) {
    const auto& seg = syllables[s].samples;
    std::array<double, 4> f{};
    try {
      f = formants(seg, clip.sample_rate, opts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SegmentTooShort && e.kind() != ErrorKind::UnstableLPC) throw;
    }
    const auto row = static_cast<Eigen::Index>(s);
    for (int k = 0; k < 4; ++k) out(row, k) = static_cast<float>(f[static_cast<std::size_t>(k)]);
    out(row, 4) = static_cast<float>(spectral_energy(seg).log_total);
  }
  return out;
}

MultiChannelFeatures extract_features(const AudioClip& clip, const FeatureOptions& opts) {
  opts.validate();
  validate_clip(clip);
  MultiChannelFeatures out;
  out.clip_id = clip.source_id;
  const auto syllables = segment_syllables(clip, opts.vad);
  out.time = time_features(clip, syllables, opts);
  out.spectral = spectral_features(clip, syllables, opts);
  const auto frames = frame(clip, opts.frame_ms, opts.hop_ms, Window::Hamming);
  out.cepstral = fuse_cepstral(mfcc(frames, opts), lfcc(frames, opts)).values.cast<float>();
  return out;
}

}  // namespace hv
