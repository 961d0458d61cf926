#include "henvox/vad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "henvox/dsp.hpp"
#include "henvox/error.hpp"

namespace hv {

namespace {

constexpr double kFlatnessFloor = 1e-12;

bool in_unit_interval(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

void VadConfig::validate() const {
  if (!in_unit_interval(energy_threshold_ratio) || !in_unit_interval(entropy_threshold) ||
      !in_unit_interval(prominence_threshold)) {
    throw Error(ErrorKind::InvalidConfig, "VAD thresholds must lie in (0, 1)");
  }
  if (min_syllable_ms <= 0.0 || merge_gap_ms < 0.0 || smoothing_frames < 1) {
    throw Error(ErrorKind::InvalidConfig, "VAD durations must be positive");
  }
}

std::vector<double> short_time_energy(const FrameSequence& frames) {
  std::vector<double> e(frames.num_frames());
  for (Eigen::Index t = 0; t < frames.frames.rows(); ++t) {
    e[static_cast<std::size_t>(t)] = frames.frames.row(t).squaredNorm();
  }
  return e;
}

std::vector<double> wiener_entropy(const FrameSequence& frames) {
  const std::size_t nfft = dsp::next_pow2(frames.frame_len());
  std::vector<double> out(frames.num_frames());
  std::vector<double> buf(frames.frame_len());
  for (Eigen::Index t = 0; t < frames.frames.rows(); ++t) {
    for (std::size_t k = 0; k < buf.size(); ++k) {
      buf[k] = frames.frames(t, static_cast<Eigen::Index>(k));
    }
    const auto p = dsp::power_spectrum(buf, nfft);
    double log_sum = 0.0;
    double sum = 0.0;
    for (double v : p) {
      const double f = std::max(v, kFlatnessFloor);
      log_sum += std::log(f);
      sum += f;
    }
    const double n = static_cast<double>(p.size());
    const double flat = std::exp(log_sum / n) / (sum / n);
    out[static_cast<std::size_t>(t)] = std::clamp(flat, 0.0, 1.0);
  }
  return out;
}

std::vector<Peak> find_peaks(std::span<const double> x) {
  std::vector<Peak> peaks;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        const std::size_t plateau_end = ahead - 1;
        Peak pk;
        pk.index = (i + plateau_end) / 2;
        const double h = x[pk.index];

        std::size_t left_base = i;
        double left_min = h;
        for (std::size_t j = i; j-- > 0;) {
          if (x[j] > h) break;
          if (x[j] < left_min) {
            left_min = x[j];
            left_base = j;
          }
        }
        std::size_t right_base = plateau_end;
        double right_min = h;
        for (std::size_t j = plateau_end + 1; j < n; ++j) {
          if (x[j] > h) break;
          if (x[j] < right_min) {
            right_min = x[j];
            right_base = j;
          }
        }
        pk.prominence = h - std::max(left_min, right_min);
        pk.left_base = left_base;
        pk.right_base = right_base;
        peaks.push_back(pk);
        i = ahead;
        continue;
      }
      i = ahead;
      continue;
    }
    ++i;
  }
  return peaks;
}

std::vector<double> moving_average(std::span<const double> x, int width) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t half = width / 2;
  std::vector<double> out(x.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, t + (width - 1 - half));
    double s = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) s += x[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(t)] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::vector<SyllableSegment> segment_syllables(const AudioClip& clip, const VadConfig& cfg) {
  cfg.validate();
  validate_clip(clip);
  const std::size_t frame_len = samples_for_ms(cfg.frame_ms, clip.sample_rate);
  const std::size_t hop_len = samples_for_ms(cfg.hop_ms, clip.sample_rate);
  if (frame_count(clip.samples.size(), frame_len, hop_len) == 0) return {};

  const auto energy = short_time_energy(frame(clip, cfg.frame_ms, cfg.hop_ms, Window::Rectangular));
  const auto flatness = wiener_entropy(frame(clip, cfg.frame_ms, cfg.hop_ms, Window::Hamming));
  const auto envelope = moving_average(energy, cfg.smoothing_frames);
  const std::size_t n = energy.size();

  const double max_energy = *std::max_element(energy.begin(), energy.end());
  if (max_energy <= 0.0) return {};
  const double energy_floor = cfg.energy_threshold_ratio * max_energy;

  const auto [env_min, env_max] = std::minmax_element(envelope.begin(), envelope.end());
  const double prominence_floor = cfg.prominence_threshold * (*env_max - *env_min);
  std::vector<char> under_peak(n, 0);
  for (const Peak& pk : find_peaks(envelope)) {
    if (pk.prominence > prominence_floor) {
      std::fill(under_peak.begin() + static_cast<std::ptrdiff_t>(pk.left_base),
                under_peak.begin() + static_cast<std::ptrdiff_t>(pk.right_base) + 1, 1);
    }
  }

  struct Run {
    std::size_t first;
    std::size_t last;
  };
  std::vector<Run> runs;
  for (std::size_t t = 0; t < n; ++t) {
    const bool voiced = energy[t] > energy_floor && flatness[t] < cfg.entropy_threshold && under_peak[t];
    if (!voiced) continue;
    if (!runs.empty() && runs.back().last + 1 == t) {
      runs.back().last = t;
    } else {
      runs.push_back({t, t});
    }
  }

  std::vector<Run> merged;
  for (const Run& r : runs) {
    if (!merged.empty()) {
      const double gap_ms = static_cast<double>(r.first - merged.back().last - 1) * cfg.hop_ms;
      if (gap_ms < cfg.merge_gap_ms) {
        merged.back().last = r.last;
        continue;
      }
    }
    merged.push_back(r);
  }

  std::vector<SyllableSegment> out;
  const double sr = clip.sample_rate;
  std::size_t prev_end = 0;
  for (const Run& r : merged) {
    // Frames longer than two hops could make neighbouring segments overlap.
    const std::size_t begin = std::max(r.first * hop_len, prev_end);
    const std::size_t end = std::min(clip.samples.size(), r.last * hop_len + frame_len);
    const double dur_ms = 1000.0 * static_cast<double>(end - begin) / sr;
    if (dur_ms < cfg.min_syllable_ms) continue;
    const double mean_energy =
        std::accumulate(energy.begin() + static_cast<std::ptrdiff_t>(r.first),
                        energy.begin() + static_cast<std::ptrdiff_t>(r.last) + 1, 0.0) /
        static_cast<double>(r.last - r.first + 1);
    if (mean_energy <= energy_floor) continue;
    prev_end = end;
    SyllableSegment seg;
    seg.start_s = static_cast<double>(begin) / sr;
    seg.end_s = static_cast<double>(end) / sr;
    seg.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                       clip.samples.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace hv
