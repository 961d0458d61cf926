#pragma once

#include <filesystem>
#include <vector>

#include "henvox/features.hpp"

namespace hv {

// "HVFC1", version byte, then one record per clip until end of file:
//   id (u32 length + bytes), time/spectral/cepstral blocks as
//   (rows u32, cols u32, row-major float32), label bitmask byte (0 = none).
inline constexpr std::uint8_t kFeatureCacheVersion = 1;

void write_feature_cache(const std::filesystem::path& path,
                         const std::vector<MultiChannelFeatures>& clips);
std::vector<MultiChannelFeatures> read_feature_cache(const std::filesystem::path& path);

}  // namespace hv
