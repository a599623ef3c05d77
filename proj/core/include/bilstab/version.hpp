#pragma once

namespace bilstab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bilstab
