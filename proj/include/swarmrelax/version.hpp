#pragma once

namespace swarmrelax {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace swarmrelax
