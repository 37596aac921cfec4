#pragma once

#include "tbpos/point_cloud.hpp"

#include <filesystem>

namespace tbpos {

/// Loads a PLY point cloud. Accepts ascii and binary_little_endian files whose
/// vertex element carries x/y/z (float32 or float64) and red/green/blue
/// (uint8) scalar properties; other scalar vertex properties are skipped and
/// elements after the vertices are ignored. Throws ParseError for malformed
/// or truncated input, naming the offending line or byte offset, and for
/// non-finite coordinates. The cloud's scan_id defaults to the file stem.
PointCloud load_ply(const std::filesystem::path& path);

/// Writes a cloud as binary_little_endian PLY with float32 coordinates and
/// uint8 colors. load_ply(save_ply(c)) reproduces c exactly when c holds
/// float32-representable coordinates. Throws std::invalid_argument for an
/// empty cloud and IoError on write failure.
void save_ply(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace tbpos
