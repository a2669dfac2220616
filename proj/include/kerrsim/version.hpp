#pragma once

namespace kerrsim {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace kerrsim
