#pragma once

namespace hjprox {

inline constexpr const char* kVersion = "hjprox-0.1.0";

}  // namespace hjprox
