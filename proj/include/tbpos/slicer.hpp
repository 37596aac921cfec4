#pragma once

#include "tbpos/point_cloud.hpp"
#include "tbpos/raster.hpp"
#include "tbpos/render.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace tbpos {

/// Database slicing geometry: a yaw ring per pitch value, all sharing the
/// scanner center. Defaults give the 12 x 3 = 36 cutouts per scan at 30
/// degree stride and 60 degree field of view.
struct SliceConfig {
  int yaw_count = 12;
  double yaw_stride_deg = 30.0;
  std::vector<double> pitch_ring_deg = {-30.0, 0.0, 30.0};
  double hfov_deg = 60.0;
  int width = 1024;
  int height = 768;
  RenderParams render;

  int cutouts_per_scan() const {
    return yaw_count * static_cast<int>(pitch_ring_deg.size());
  }
};

/// Cutout orientations for one scan: pitch-major then yaw, so index =
/// pitch_index * yaw_count + yaw_index, with zero-padded 3-digit suffixes.
/// Every pose shares the scanner's camera center; yaw angles start at the
/// scanner's horizontal heading and advance by yaw_stride_deg.
std::vector<std::pair<std::string, Posed>> generate_cutout_poses(
    const Posed& scanner_pose, const SliceConfig& config);

/// Stable frustum pre-filter: keeps points within the view cone of the
/// intrinsics (plus a margin covering splatting and rounding), preserving
/// order. Returns the subset and its strictly increasing original indices,
/// ready to hand to render() for bit-identical output.
std::pair<PointCloud, std::vector<std::uint32_t>> filter_frustum(
    const PointCloud& cloud, const Posed& pose, const CameraIntrinsicsd& intrinsics,
    const RenderParams& params);

struct CutoutResult {
  std::string image_id;
  RgbdImage image;
  double pre_fill_missing = 0.0;
};

struct SliceReport {
  int rendered = 0;
  int skipped = 0;
  double mean_missing_fraction = 0.0;  // pre-fill, over rendered cutouts
  std::vector<std::string> skipped_ids;
};

/// Renders and hole-fills every cutout of one scan, invoking `sink` for each
/// finished image. Cutouts run in parallel; the sink must be safe to call
/// from multiple threads. Image ids are `<scan_id>_<index:03>` using the
/// cloud's scan_id. A cutout that catches no points is recorded as skipped.
SliceReport slice_scan(const PointCloud& cloud, const Posed& scanner_pose,
                       const SliceConfig& config,
                       const std::function<void(CutoutResult&&)>& sink,
                       int workers = 0);

/// Convenience variant collecting the cutouts, ordered by image id.
std::vector<RgbdImage> slice_scan(const PointCloud& cloud, const Posed& scanner_pose,
                                  const SliceConfig& config, int workers = 0);

}  // namespace tbpos
