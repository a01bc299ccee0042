#pragma once

namespace mvd {

inline constexpr const char* kVersion = "0.1.0";
// Bumped whenever a CSV/JSON output column is added, removed or renamed.
inline constexpr int kSchemaVersion = 1;

}  // namespace mvd
