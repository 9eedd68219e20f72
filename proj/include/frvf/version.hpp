#pragma once

namespace frvf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace frvf
