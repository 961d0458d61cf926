#include "henvox/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "henvox/binary_io.hpp"
#include "henvox/error.hpp"

namespace hv {

namespace {
constexpr char kMagic[5] = {'H', 'V', 'C', 'K', '1'};
}

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw Error(ErrorKind::BadFormat, "checkpoint has no array '" + name + "'");
}

const std::string& Checkpoint::value(const std::string& key) const {
  const auto it = config.find(key);
  if (it == config.end()) throw Error(ErrorKind::BadFormat, "checkpoint has no key '" + key + "'");
  return it->second;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_config_block(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_config_block(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::BadFormat, "malformed config line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  io::write_le<std::uint8_t>(out, kCheckpointVersion);
  io::write_string(out, format_config_block(ckpt.config));
  for (const auto& a : ckpt.arrays) {
    io::write_string(out, a.name);
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) io::write_le<std::uint32_t>(out, d);
    out.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  char magic[5];
  in.read(magic, sizeof(magic));
  if (in.gcount() != 5 || !std::equal(magic, magic + 5, kMagic)) {
    throw Error(ErrorKind::BadFormat, path.string() + " is not a checkpoint");
  }
  const auto version = io::read_le<std::uint8_t>(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::BadFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = parse_config_block(io::read_string(in));
  while (!io::at_end(in)) {
    NamedArray a;
    a.name = io::read_string(in);
    const auto rank = io::read_le<std::uint32_t>(in);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      a.dims.push_back(io::read_le<std::uint32_t>(in));
      count *= a.dims.back();
    }
    a.data.resize(count);
    const auto bytes = static_cast<std::streamsize>(count * sizeof(double));
    in.read(reinterpret_cast<char*>(a.data.data()), bytes);
    if (in.gcount() != bytes) throw Error(ErrorKind::BadFormat, "truncated array '" + a.name + "'");
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

}  // namespace hv
