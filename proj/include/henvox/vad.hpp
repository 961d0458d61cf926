#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "henvox/audio_io.hpp"

namespace hv {

struct SyllableSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<float> samples;  // copy of the parent clip's slice

  double duration_s() const { return end_s - start_s; }
};

struct VadConfig {
  double energy_threshold_ratio = 0.1;  // of the clip's max frame energy
  double entropy_threshold = 0.5;       // spectral flatness upper bound
  double prominence_threshold = 0.1;    // of the envelope's dynamic range
  double min_syllable_ms = 30.0;
  double merge_gap_ms = 50.0;
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  int smoothing_frames = 5;

  void validate() const;
};

struct Peak {
  std::size_t index = 0;
  double prominence = 0.0;
  std::size_t left_base = 0;
  std::size_t right_base = 0;
};

std::vector<double> short_time_energy(const FrameSequence& frames);

// Spectral flatness (Wiener entropy) per frame, in [0, 1].
std::vector<double> wiener_entropy(const FrameSequence& frames);

// Topographic prominence of every interior local maximum, with the bases that
// bound it. Flat-topped peaks are reported at the middle of the plateau.
std::vector<Peak> find_peaks(std::span<const double> envelope);

// Centered moving average; the window shrinks at the edges.
std::vector<double> moving_average(std::span<const double> x, int width);

std::vector<SyllableSegment> segment_syllables(const AudioClip& clip, const VadConfig& cfg = {});

}  // namespace hv
