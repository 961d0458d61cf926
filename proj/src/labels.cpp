#include "henvox/labels.hpp"

#include <algorithm>
#include <cctype>

#include "henvox/error.hpp"

namespace hv {

namespace {

constexpr std::array<std::string_view, kNumSubclasses> kTokens = {
    "food_calls", "distress", "panic", "egg_laying", "fear", "alarm", "gakel_calls", "lonely_calls"};
constexpr std::array<std::string_view, kNumSubclasses> kNames = {
    "Food calls", "Distress", "Panic", "Egg laying", "Fear", "Alarm", "Gakel calls", "Lonely calls"};
constexpr std::array<std::string_view, kNumMasters> kMasterNames = {
    "Food calls", "Egg laying", "Fear", "Lonely calls"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view subclass_token(int subclass) { return kTokens.at(static_cast<std::size_t>(subclass)); }
std::string_view subclass_name(int subclass) { return kNames.at(static_cast<std::size_t>(subclass)); }
std::string_view master_name(int master) { return kMasterNames.at(static_cast<std::size_t>(master)); }

std::optional<int> parse_subclass(std::string_view text) {
  text = trim(text);
  for (int i = 0; i < kNumSubclasses; ++i) {
    if (iequals(text, kTokens[static_cast<std::size_t>(i)]) ||
        iequals(text, kNames[static_cast<std::size_t>(i)])) {
      return i;
    }
  }
  return std::nullopt;
}

std::vector<int> members_of(int master) {
  std::vector<int> out;
  for (int i = 0; i < kNumSubclasses; ++i) {
    if (kMasterOf[static_cast<std::size_t>(i)] == master) out.push_back(i);
  }
  return out;
}

LabelVector LabelVector::from_subclasses(const std::array<bool, kNumSubclasses>& sub) {
  LabelVector v;
  v.sub_ = sub;
  for (int i = 0; i < kNumSubclasses; ++i) {
    if (sub[static_cast<std::size_t>(i)]) v.master_[static_cast<std::size_t>(kMasterOf[static_cast<std::size_t>(i)])] = true;
  }
  if (v.count() == 0) {
    throw Error(ErrorKind::InvalidLabels, "a label vector needs at least one subclass");
  }
  return v;
}

LabelVector LabelVector::from_mask(std::uint8_t mask) {
  std::array<bool, kNumSubclasses> sub{};
  for (int i = 0; i < kNumSubclasses; ++i) sub[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
  return from_subclasses(sub);
}

LabelVector LabelVector::from_indices(const std::vector<int>& subclasses) {
  std::array<bool, kNumSubclasses> sub{};
  for (int i : subclasses) {
    if (i < 0 || i >= kNumSubclasses) {
      throw Error(ErrorKind::InvalidLabels, "subclass index out of range");
    }
    sub[static_cast<std::size_t>(i)] = true;
  }
  return from_subclasses(sub);
}

LabelVector LabelVector::from_parts(const std::array<bool, kNumSubclasses>& sub,
                                    const std::array<bool, kNumMasters>& master) {
  LabelVector v = from_subclasses(sub);
  if (v.master_ != master) {
    throw Error(ErrorKind::InvalidLabels, "master indicators must be the OR of their subclasses");
  }
  return v;
}

std::uint8_t LabelVector::mask() const {
  std::uint8_t m = 0;
  for (int i = 0; i < kNumSubclasses; ++i) {
    if (sub_[static_cast<std::size_t>(i)]) m = static_cast<std::uint8_t>(m | (1u << i));
  }
  return m;
}

std::vector<int> LabelVector::indices() const {
  std::vector<int> out;
  for (int i = 0; i < kNumSubclasses; ++i) {
    if (sub_[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

int LabelVector::primary() const {
  for (int i = 0; i < kNumSubclasses; ++i) {
    if (sub_[static_cast<std::size_t>(i)]) return i;
  }
  return -1;
}

int LabelVector::count() const {
  return static_cast<int>(std::count(sub_.begin(), sub_.end(), true));
}

std::string LabelVector::to_string() const {
  std::string out;
  for (int i : indices()) {
    if (!out.empty()) out += ',';
    out += subclass_token(i);
  }
  return out;
}

LabelVector LabelVector::parse(std::string_view text) {
  std::vector<int> idx;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    const auto parsed = parse_subclass(item);
    if (!parsed) {
      throw Error(ErrorKind::InvalidLabels, "unknown subclass '" + std::string(trim(item)) + "'");
    }
    idx.push_back(*parsed);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return from_indices(idx);
}

}  // namespace hv
