#pragma once

namespace spacoclust {

inline constexpr const char* version = "0.1.0";

} // namespace spacoclust
