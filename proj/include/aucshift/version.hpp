#pragma once

namespace aucshift {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace aucshift
