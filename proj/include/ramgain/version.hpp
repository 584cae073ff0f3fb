#pragma once

namespace ramgain {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ramgain
