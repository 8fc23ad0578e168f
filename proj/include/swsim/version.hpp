#pragma once

namespace swsim {
inline constexpr const char* kVersion = "0.1.0";
}
