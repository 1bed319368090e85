#pragma once

namespace glee {

inline constexpr const char* kToolName = "glee";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace glee
