#pragma once

namespace rfsep {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rfsep
