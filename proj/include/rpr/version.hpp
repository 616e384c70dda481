#pragma once

namespace rpr {

inline constexpr const char* kArtifactVersion = "rpr-0.1.0";

}  // namespace rpr
