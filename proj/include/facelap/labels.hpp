#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace facelap {

// Fixed class order; also the tie-break order everywhere.
inline constexpr std::array<std::string_view, 6> kExpressionCodes = {"AN", "DI", "FE", "HA", "SA", "SU"};

inline constexpr std::array<int, 17> kActionUnits = {1, 2, 4, 5, 6, 7, 9, 10, 12, 15, 16, 17, 20, 23, 24, 25, 26};

using AuMask = std::uint32_t;  // bit i <=> kActionUnits[i]

std::optional<int> expression_index(std::string_view code);
std::string_view expression_code(int index);

std::optional<int> action_unit_slot(int au);

// "1+2+25" <-> mask. Empty string is the empty set.
AuMask parse_au_list(std::string_view text);
std::string format_au_list(AuMask mask);

struct SampleInfo {
  std::string subject;
  int expression = -1;  // index into kExpressionCodes
  int intensity = 0;
  AuMask aus = 0;

  friend bool operator==(const SampleInfo&, const SampleInfo&) = default;
};

}  // namespace facelap
