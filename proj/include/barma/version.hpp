#pragma once

namespace barma {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace barma
