#pragma once

namespace vitalguard {

inline constexpr int kVersionMajor = 0;
inline constexpr int kVersionMinor = 1;
inline constexpr int kVersionPatch = 0;
inline constexpr const char* kVersionString = "0.1.0";

/// Schema version stamped into every JSON artifact (models, atlases, reports).
inline constexpr int kSchemaVersion = 1;

}  // namespace vitalguard
