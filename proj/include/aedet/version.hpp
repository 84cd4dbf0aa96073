#pragma once

namespace aedet {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace aedet
