#pragma once

namespace msm {

inline constexpr const char* kToolName = "msm_mediate";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace msm
