#pragma once

namespace atp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace atp
