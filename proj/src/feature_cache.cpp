#include "henvox/feature_cache.hpp"

#include <fstream>

#include "henvox/binary_io.hpp"
#include "henvox/error.hpp"

namespace hv {

namespace {

constexpr char kMagic[5] = {'H', 'V', 'F', 'C', '1'};

void write_block(std::ostream& out, const FeatureMatrix& m) {
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(float)));
}

FeatureMatrix read_block(std::istream& in) {
  const auto rows = io::read_le<std::uint32_t>(in);
  const auto cols = io::read_le<std::uint32_t>(in);
  FeatureMatrix m(rows, cols);
  const auto bytes = static_cast<std::streamsize>(m.size() * sizeof(float));
  in.read(reinterpret_cast<char*>(m.data()), bytes);
  if (in.gcount() != bytes) throw Error(ErrorKind::BadFormat, "truncated feature block");
  return m;
}

}  // namespace

void write_feature_cache(const std::filesystem::path& path,
                         const std::vector<MultiChannelFeatures>& clips) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  io::write_le<std::uint8_t>(out, kFeatureCacheVersion);
  for (const auto& clip : clips) {
    io::write_string(out, clip.clip_id);
    write_block(out, clip.time);
    write_block(out, clip.spectral);
    write_block(out, clip.cepstral);
    io::write_le<std::uint8_t>(out, clip.label ? clip.label->mask() : 0);
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

std::vector<MultiChannelFeatures> read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  char magic[5];
  in.read(magic, sizeof(magic));
  if (in.gcount() != 5 || !std::equal(magic, magic + 5, kMagic)) {
    throw Error(ErrorKind::BadFormat, path.string() + " is not a feature cache");
  }
  const auto version = io::read_le<std::uint8_t>(in);
  if (version != kFeatureCacheVersion) {
    throw Error(ErrorKind::BadFormat, "unsupported feature cache version " + std::to_string(version));
  }
  std::vector<MultiChannelFeatures> clips;
  while (!io::at_end(in)) {
    MultiChannelFeatures f;
    f.clip_id = io::read_string(in);
    f.time = read_block(in);
    f.spectral = read_block(in);
    f.cepstral = read_block(in);
    const auto mask = io::read_le<std::uint8_t>(in);
    if (mask != 0) f.label = LabelVector::from_mask(mask);
    clips.push_back(std::move(f));
  }
  return clips;
}

}  // namespace hv
