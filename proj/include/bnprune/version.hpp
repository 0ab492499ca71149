#pragma once

#include <string_view>

namespace bnprune {

inline constexpr std::string_view version = "0.1.0";

} // namespace bnprune
