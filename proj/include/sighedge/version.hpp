#pragma once

namespace sighedge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sighedge
