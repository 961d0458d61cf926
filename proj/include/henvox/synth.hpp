#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "henvox/audio_io.hpp"
#include "henvox/labels.hpp"

namespace hv {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool valid() const { return lo <= hi; }
};

struct CallRecipe {
  int subclass = 0;
  Range burst_s;
  Range gap_s;
  Range fundamental_hz;
  Range repetition_hz;  // amplitude-modulation rate inside a burst
  Range total_s;
  Range amplitude;
  double noise_db = -45.0;                     // dBFS, gaussian
  std::array<double, 3> harmonics{1.0, 0.5, 0.25};  // relative amplitude of f0, 2f0, 3f0
  double chirp = 0.0;                          // fractional f0 rise across a burst

  void validate() const;
};

// Fixed per-class recipe table.
const CallRecipe& recipe_for(int subclass);

struct Burst {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct GeneratedClip {
  AudioClip clip;
  LabelVector label;
  std::vector<Burst> bursts;
};

// `secondary`, when given, voices every other burst and adds its label.
GeneratedClip generate_clip(const CallRecipe& recipe, std::uint64_t seed,
                            const std::optional<CallRecipe>& secondary = std::nullopt);

struct ManifestEntry {
  std::filesystem::path path;  // as written in the manifest
  LabelVector label;
  std::string split;           // "train", "test" or empty
};

// Writes 8 * per_class float WAVs plus manifest.tsv (path, labels, split).
std::vector<ManifestEntry> generate_dataset(const std::filesystem::path& out_dir, int per_class,
                                            std::uint64_t seed);

// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);
std::filesystem::path resolve_entry(const std::filesystem::path& manifest, const ManifestEntry& e);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hv
