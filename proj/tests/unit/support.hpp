#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "henvox/audio_io.hpp"

namespace test {

inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "henvox_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline std::vector<float> sine(double hz, double seconds, double amp = 0.5, int sr = hv::kSampleRate) {
  std::vector<float> x(static_cast<std::size_t>(std::lround(seconds * sr)));
  for (std::size_t n = 0; n < x.size(); ++n) {
    x[n] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(n) / sr));
  }
  return x;
}

inline std::vector<float> noise(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<float> x(n);
  for (auto& v : x) v = static_cast<float>(d(rng));
  return x;
}

inline hv::AudioClip clip_of(std::vector<float> samples) {
  hv::AudioClip c;
  c.samples = std::move(samples);
  return c;
}

// Minimal independent RIFF writer for reader tests.
inline void write_raw_wav(const std::filesystem::path& path, std::uint16_t format, std::uint16_t channels,
                          std::uint32_t rate, std::uint16_t bits, const std::vector<char>& data,
                          const char* magic = "RIFF") {
  std::ofstream f(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
  f.write(magic, 4);
  u32(static_cast<std::uint32_t>(36 + data.size()));
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  f.write("data", 4);
  u32(static_cast<std::uint32_t>(data.size()));
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline std::vector<char> pcm16(const std::vector<std::int16_t>& v) {
  std::vector<char> out(v.size() * 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[2 * i] = static_cast<char>(v[i] & 0xff);
    out[2 * i + 1] = static_cast<char>((v[i] >> 8) & 0xff);
  }
  return out;
}

}  // namespace test
