#pragma once

namespace gcnshield {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gcnshield
