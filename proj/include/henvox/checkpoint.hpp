#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hv {

struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> data;  // row-major
};

// "HVCK1", version byte, a length-prefixed key=value text block (which always
// carries kind=<model kind>), then named float64 arrays until end of file.
struct Checkpoint {
  std::map<std::string, std::string> config;
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
  const std::string& value(const std::string& key) const;
};

inline constexpr std::uint8_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string format_config_block(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> parse_config_block(const std::string& text);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace hv
