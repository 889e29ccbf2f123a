#pragma once

namespace difflan {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace difflan
