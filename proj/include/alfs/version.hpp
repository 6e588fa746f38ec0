#pragma once

namespace alfs {

inline constexpr const char* kEngineVersion = "0.1.0";

// Weight file header: 4 magic bytes + u32 format version.
inline constexpr char kWeightMagic[4] = {'A', 'L', 'F', 'W'};
inline constexpr unsigned kWeightFormatVersion = 1;

inline constexpr int kResultSchemaVersion = 1;

}  // namespace alfs
