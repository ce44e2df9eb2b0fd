#pragma once

namespace recluster {

inline constexpr const char* version = "0.1.0";

}  // namespace recluster
