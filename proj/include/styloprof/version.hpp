#pragma once

namespace styloprof {

inline constexpr const char* kToolVersion = "0.1.0";

// Magic header for model/pipeline container files.
inline constexpr const char* kModelMagic = "STYLOPROF1";

}  // namespace styloprof
