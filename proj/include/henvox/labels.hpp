#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hv {

inline constexpr int kNumSubclasses = 8;
inline constexpr int kNumMasters = 4;

enum class Subclass : std::uint8_t {
  FoodCalls = 0,
  Distress,
  Panic,
  EggLaying,
  Fear,
  Alarm,
  GakelCalls,
  LonelyCalls,
};

enum class Master : std::uint8_t { FoodCalls = 0, EggLaying, Fear, LonelyCalls };

// Subclass -> master grouping.
inline constexpr std::array<int, kNumSubclasses> kMasterOf = {0, 0, 0, 1, 2, 2, 2, 3};

std::string_view subclass_token(int subclass);   // e.g. "egg_laying"
std::string_view subclass_name(int subclass);    // e.g. "Egg laying"
std::string_view master_name(int master);
std::optional<int> parse_subclass(std::string_view text);  // token or display name
std::vector<int> members_of(int master);

class LabelVector {
 public:
  LabelVector() = default;

  // Master indicators are derived. Throws InvalidLabels when no bit is set.
  static LabelVector from_subclasses(const std::array<bool, kNumSubclasses>& sub);
  static LabelVector from_mask(std::uint8_t mask);
  static LabelVector from_indices(const std::vector<int>& subclasses);
  // Throws InvalidLabels unless master[m] is the OR of its members.
  static LabelVector from_parts(const std::array<bool, kNumSubclasses>& sub,
                                const std::array<bool, kNumMasters>& master);

  bool sub(int i) const { return sub_[static_cast<std::size_t>(i)]; }
  bool master(int m) const { return master_[static_cast<std::size_t>(m)]; }
  const std::array<bool, kNumSubclasses>& subclasses() const { return sub_; }
  const std::array<bool, kNumMasters>& masters() const { return master_; }

  std::uint8_t mask() const;
  std::vector<int> indices() const;
  int primary() const;  // lowest set subclass index
  int count() const;

  // Comma-separated tokens in subclass order.
  std::string to_string() const;
  static LabelVector parse(std::string_view text);

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::array<bool, kNumSubclasses> sub_{};
  std::array<bool, kNumMasters> master_{};
};

}  // namespace hv
