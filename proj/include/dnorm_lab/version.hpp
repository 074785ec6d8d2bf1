#pragma once

namespace dnorm_lab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dnorm_lab
