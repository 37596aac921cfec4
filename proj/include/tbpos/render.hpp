#pragma once

#include "tbpos/geometry.hpp"
#include "tbpos/point_cloud.hpp"
#include "tbpos/raster.hpp"

#include <cstdint>
#include <vector>

namespace tbpos {

struct RenderParams {
  double z_near = 0.1;            // meters; points closer are discarded
  int splat_radius = 1;           // square splat of side 2r+1, r in [0, 3]
  double depth_tie_epsilon = 1e-6;  // meters
  int max_fill_iterations = 100;
};

inline constexpr std::uint32_t kNoPoint = 0xFFFFFFFFu;

/// Direct z-buffer projection of a cloud, before hole filling. Pixels without
/// any projected point are invalid (depth 0, mask false, point_index kNoPoint).
struct RawRender {
  RgbRaster rgb;
  DepthRaster depth;
  MaskRaster valid_mask;
  Raster<std::uint32_t> point_index;  // winning point per pixel
  double missing_fraction = 1.0;
  Posed pose;
  CameraIntrinsicsd intrinsics;
};

/// Z-buffered point splatting.
///
/// Each point is mapped to camera coordinates, discarded if z < z_near, and
/// projected to the nearest-integer pixel; its color is splat to every pixel
/// within Chebyshev distance splat_radius of that center. Per pixel the
/// candidate with the smallest depth wins; candidates within depth_tie_epsilon
/// of the minimum are tied and the lowest point index wins among them. The
/// result is byte-identical for any worker count (0 = hardware concurrency).
///
/// `original_indices`, when given, must be strictly increasing and maps local
/// point columns to indices in an unfiltered parent cloud; tie-breaking and
/// the point_index channel then use the parent indices, so rendering a
/// frustum-filtered subset reproduces the unfiltered output exactly.
RawRender render(const PointCloud& cloud, const Posed& pose,
                 const CameraIntrinsicsd& intrinsics,
                 const RenderParams& params = {}, int workers = 0,
                 const std::vector<std::uint32_t>* original_indices = nullptr);

/// Iterative clamped interpolation of missing pixels.
///
/// Per iteration, every invalid pixel with at least one valid 8-neighbor
/// receives the per-channel arithmetic mean of those valid neighbors, clamped
/// to their [min, max]; depth is filled the same way. Newly filled pixels
/// count as valid from the next iteration on. After max_fill_iterations any
/// survivors are set to black, depth 0, and stay invalid in the mask.
/// Originally valid pixels are never modified.
RgbdImage fill_holes(const RawRender& raw, const RenderParams& params = {},
                     int workers = 0);

/// True iff the render's missing-pixel share is within the budget (inclusive).
bool quality_gate(const RawRender& raw, double max_missing);

/// World point seen at valid pixel (u, v): the stored depth back-projected
/// through the pinhole and mapped out of the camera frame.
Eigen::Vector3d unproject(const RgbdImage& image, int u, int v);

}  // namespace tbpos
