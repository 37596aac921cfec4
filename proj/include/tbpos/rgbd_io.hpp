#pragma once

#include "tbpos/raster.hpp"

#include <filesystem>
#include <string>

namespace tbpos {

/// Writes a pose as 4 lines: the token `CFW`, then the rows of [R | t] at 17
/// significant digits.
void write_pose_text(const Posed& pose, const std::filesystem::path& path);

/// Reads the 4-line pose format. The rotation must be orthonormal within
/// 1e-6 and is re-orthonormalized on load. Throws ParseError otherwise.
Posed read_pose_text(const std::filesystem::path& path);

struct RgbdWriteStats {
  int saturated_depths = 0;  // pixels beyond 65.535 m clamped to the max
};

/// Persists an image as `<image_id>.rgb.png` (8-bit RGB),
/// `<image_id>.depth.png` (16-bit grayscale, millimeters, 0 = invalid,
/// saturating at 65535) and `<image_id>.pose.txt` inside `dir`.
RgbdWriteStats write_rgbd(const RgbdImage& image, const std::filesystem::path& dir);

/// Reads back a triplet written by write_rgbd. Depth is reproduced within the
/// 0.5 mm quantization and the mask is derived from depth > 0. Intrinsics are
/// dataset-level (they are not stored per image) and must be supplied; their
/// resolution is checked against the rasters.
RgbdImage read_rgbd(const std::filesystem::path& dir, const std::string& image_id,
                    const CameraIntrinsicsd& intrinsics);

}  // namespace tbpos
