#include "henvox/audio_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include "henvox/binary_io.hpp"
#include "henvox/error.hpp"

namespace hv {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct WavFormat {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

std::string read_tag(std::istream& in) {
  char tag[4];
  in.read(tag, 4);
  if (in.gcount() != 4) {
    throw Error(ErrorKind::NotWav, "truncated chunk header");
  }
  return std::string(tag, 4);
}

}  // namespace

void validate_clip(const AudioClip& clip) {
  if (clip.sample_rate != kSampleRate) {
    throw Error(ErrorKind::BadSampleRate,
                "expected 16000 Hz, got " + std::to_string(clip.sample_rate));
  }
  if (clip.samples.empty()) {
    throw Error(ErrorKind::ClipTooShort, "clip has no samples");
  }
  for (float s : clip.samples) {
    if (!std::isfinite(s)) {
      throw Error(ErrorKind::UnsupportedFormat, "clip contains non-finite samples");
    }
  }
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  }
  try {
    if (read_tag(in) != "RIFF") throw Error(ErrorKind::NotWav, "missing RIFF magic");
    io::read_le<std::uint32_t>(in);
    if (read_tag(in) != "WAVE") throw Error(ErrorKind::NotWav, "missing WAVE magic");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::BadFormat) throw Error(ErrorKind::NotWav, path.string());
    throw;
  }

  WavFormat fmt;
  bool have_fmt = false;
  std::vector<char> data;
  bool have_data = false;
  while (!have_data && !io::at_end(in)) {
    const std::string tag = read_tag(in);
    const auto size = io::read_le<std::uint32_t>(in);
    if (tag == "fmt ") {
      if (size < 16) throw Error(ErrorKind::NotWav, "fmt chunk too small");
      fmt.format = io::read_le<std::uint16_t>(in);
      fmt.channels = io::read_le<std::uint16_t>(in);
      fmt.sample_rate = io::read_le<std::uint32_t>(in);
      io::read_le<std::uint32_t>(in);  // byte rate
      io::read_le<std::uint16_t>(in);  // block align
      fmt.bits = io::read_le<std::uint16_t>(in);
      std::vector<char> rest(size - 16);
      in.read(rest.data(), static_cast<std::streamsize>(rest.size()));
      if (fmt.format == kFormatExtensible && rest.size() >= 10) {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID.
        std::uint16_t sub = 0;
        std::memcpy(&sub, rest.data() + 8, sizeof(sub));
        fmt.format = sub;
      }
      have_fmt = true;
    } else if (tag == "data") {
      data.resize(size);
      in.read(data.data(), size);
      if (static_cast<std::uint32_t>(in.gcount()) != size) {
        throw Error(ErrorKind::NotWav, "truncated data chunk");
      }
      have_data = true;
    } else {
      in.seekg(size + (size & 1u), std::ios::cur);
    }
    if ((tag == "fmt " || tag == "data") && (size & 1u)) in.seekg(1, std::ios::cur);
  }
  if (!have_fmt || !have_data) {
    throw Error(ErrorKind::NotWav, "missing fmt or data chunk in " + path.string());
  }
  if (fmt.channels != 1) {
    throw Error(ErrorKind::UnsupportedFormat,
                "expected mono, got " + std::to_string(fmt.channels) + " channels");
  }
  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
  const bool float32 = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorKind::UnsupportedFormat,
                "encoding " + std::to_string(fmt.format) + "/" + std::to_string(fmt.bits) +
                    " bits is not PCM16 or float32");
  }
  if (fmt.sample_rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw Error(ErrorKind::BadSampleRate,
                "expected 16000 Hz, got " + std::to_string(fmt.sample_rate));
  }

  AudioClip clip;
  clip.sample_rate = kSampleRate;
  clip.source_id = path.stem().string();
  if (pcm16) {
    const std::size_t n = data.size() / 2;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t v;
      std::memcpy(&v, data.data() + 2 * i, 2);
      clip.samples[i] = std::max(-1.0f, static_cast<float>(v) / 32768.0f);
    }
  } else {
    const std::size_t n = data.size() / 4;
    clip.samples.resize(n);
    std::memcpy(clip.samples.data(), data.data(), n * 4);
  }
  validate_clip(clip);
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  }
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 4);
  out.write("RIFF", 4);
  io::write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  io::write_le<std::uint32_t>(out, 16);
  io::write_le<std::uint16_t>(out, kFormatFloat);
  io::write_le<std::uint16_t>(out, 1);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * 4);
  io::write_le<std::uint16_t>(out, 4);
  io::write_le<std::uint16_t>(out, 32);
  out.write("data", 4);
  io::write_le<std::uint32_t>(out, data_bytes);
  out.write(reinterpret_cast<const char*>(clip.samples.data()), data_bytes);
  if (!out) {
    throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
  }
}

std::vector<double> make_window(Window window, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (window == Window::Hamming && length > 1) {
    const double denom = static_cast<double>(length - 1);
    for (std::size_t n = 0; n < length; ++n) {
      w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
    }
  }
  return w;
}

std::size_t frame_count(std::size_t num_samples, std::size_t frame_len, std::size_t hop_len) {
  if (num_samples < frame_len || frame_len == 0 || hop_len == 0) return 0;
  return (num_samples - frame_len) / hop_len + 1;
}

std::size_t samples_for_ms(double ms, int sample_rate) {
  const double exact = ms * sample_rate / 1000.0;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9 || rounded < 1.0) {
    throw Error(ErrorKind::InvalidConfig,
                std::to_string(ms) + " ms is not a whole number of samples");
  }
  return static_cast<std::size_t>(rounded);
}

FrameSequence frame(const AudioClip& clip, double frame_ms, double hop_ms, Window window) {
  const std::size_t frame_len = samples_for_ms(frame_ms, clip.sample_rate);
  const std::size_t hop_len = samples_for_ms(hop_ms, clip.sample_rate);
  if (frame_len < 2) {
    throw Error(ErrorKind::InvalidConfig, "frame must span at least 2 samples");
  }
  const std::size_t n = frame_count(clip.samples.size(), frame_len, hop_len);
  if (n == 0) {
    throw Error(ErrorKind::ClipTooShort, "clip of " + std::to_string(clip.samples.size()) +
                                             " samples is shorter than one frame");
  }
  const auto weights = make_window(window, frame_len);
  FrameSequence seq;
  seq.frame_ms = frame_ms;
  seq.hop_ms = hop_ms;
  seq.sample_rate = clip.sample_rate;
  seq.frames.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(frame_len));
  for (std::size_t t = 0; t < n; ++t) {
    const float* src = clip.samples.data() + t * hop_len;
    for (std::size_t k = 0; k < frame_len; ++k) {
      seq.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) =
          static_cast<double>(src[k]) * weights[k];
    }
  }
  return seq;
}

}  // namespace hv
