#pragma once

namespace sage {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace sage
