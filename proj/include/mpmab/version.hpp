#pragma once

namespace mpmab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mpmab
