#pragma once

namespace elai {

inline constexpr const char* kToolName = "elai";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace elai
