#include "facelap/labels.hpp"

#include <charconv>
#include <stdexcept>

namespace facelap {

std::optional<int> expression_index(std::string_view code) {
  for (std::size_t i = 0; i < kExpressionCodes.size(); ++i)
    if (kExpressionCodes[i] == code) return static_cast<int>(i);
  return std::nullopt;
}

std::string_view expression_code(int index) {
  if (index < 0 || index >= static_cast<int>(kExpressionCodes.size()))
    throw std::out_of_range("expression index " + std::to_string(index));
  return kExpressionCodes[static_cast<std::size_t>(index)];
}

std::optional<int> action_unit_slot(int au) {
  for (std::size_t i = 0; i < kActionUnits.size(); ++i)
    if (kActionUnits[i] == au) return static_cast<int>(i);
  return std::nullopt;
}

AuMask parse_au_list(std::string_view text) {
  AuMask mask = 0;
  while (!text.empty()) {
    const auto plus = text.find('+');
    std::string_view tok = text.substr(0, plus);
    text = plus == std::string_view::npos ? std::string_view{} : text.substr(plus + 1);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (!tok.empty() && (tok.front() == 'A' || tok.front() == 'a')) {
      // Tolerate "AU12".
      if (tok.size() > 2 && (tok[1] == 'U' || tok[1] == 'u')) tok.remove_prefix(2);
    }
    int au = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), au);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
      throw std::invalid_argument("malformed AU token '" + std::string(tok) + "'");
    const auto slot = action_unit_slot(au);
    if (!slot) throw std::invalid_argument("AU " + std::to_string(au) + " is not in the supported AU set");
    mask |= AuMask{1} << *slot;
  }
  return mask;
}

std::string format_au_list(AuMask mask) {
  std::string out;
  for (std::size_t i = 0; i < kActionUnits.size(); ++i) {
    if (!(mask >> i & 1u)) continue;
    if (!out.empty()) out += '+';
    out += std::to_string(kActionUnits[i]);
  }
  return out;
}

}  // namespace facelap
