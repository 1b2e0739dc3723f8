#pragma once

namespace structcond {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace structcond
