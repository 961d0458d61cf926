#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hv {

inline constexpr int kSampleRate = 16000;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Mono waveform, nominal range [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
  std::string source_id;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class Window { Rectangular, Hamming };

struct FrameSequence {
  RowMatrix frames;  // num_frames x frame_len, window already applied
  double frame_ms = 0.0;
  double hop_ms = 0.0;
  int sample_rate = kSampleRate;

  std::size_t num_frames() const { return static_cast<std::size_t>(frames.rows()); }
  std::size_t frame_len() const { return static_cast<std::size_t>(frames.cols()); }
  std::size_t hop_len() const {
    return static_cast<std::size_t>(hop_ms * sample_rate / 1000.0 + 0.5);
  }
};

// Throws UnsupportedFormat/BadSampleRate/ClipTooShort via hv::Error.
void validate_clip(const AudioClip& clip);

AudioClip load_wav(const std::filesystem::path& path);

// Always writes IEEE float32, mono, at clip.sample_rate.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

std::vector<double> make_window(Window window, std::size_t length);

// Number of whole frames; 0 when the signal is shorter than one frame.
std::size_t frame_count(std::size_t num_samples, std::size_t frame_len, std::size_t hop_len);

FrameSequence frame(const AudioClip& clip, double frame_ms, double hop_ms,
                    Window window = Window::Hamming);

// Samples spanned by `ms` milliseconds; InvalidConfig unless that is a whole number.
std::size_t samples_for_ms(double ms, int sample_rate);

}  // namespace hv
