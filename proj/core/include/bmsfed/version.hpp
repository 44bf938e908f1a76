#pragma once

namespace bmsfed {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bmsfed
