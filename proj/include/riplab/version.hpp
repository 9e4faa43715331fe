#pragma once

namespace riplab {

inline constexpr const char* version_string = "riplab 0.1.0";

}  // namespace riplab
