#pragma once

namespace flakysieve {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flakysieve
