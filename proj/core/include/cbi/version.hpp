#pragma once

namespace cbi {
inline constexpr const char* version = "0.1.0";
}
