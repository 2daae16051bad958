#pragma once

namespace epsense {

inline constexpr const char* kArtifactVersion = "1.0.0";

} // namespace epsense
