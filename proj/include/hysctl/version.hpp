#pragma once

namespace hysctl {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace hysctl
