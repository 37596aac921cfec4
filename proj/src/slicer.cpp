#include "tbpos/slicer.hpp"

#include "tbpos/image_id.hpp"
#include "tbpos/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace tbpos {

namespace {

void validate_config(const SliceConfig& config) {
  if (config.yaw_count < 1 || !(config.yaw_stride_deg > 0.0)) {
    throw std::invalid_argument("slice: yaw_count must be >= 1 with positive stride");
  }
  if (config.pitch_ring_deg.empty()) {
    throw std::invalid_argument("slice: pitch ring must not be empty");
  }
  for (const double pitch : config.pitch_ring_deg) {
    if (!(std::abs(pitch) < 90.0)) {
      throw std::invalid_argument("slice: pitch values must lie in (-90, 90) deg");
    }
  }
}

}  // namespace

std::vector<std::pair<std::string, Posed>> generate_cutout_poses(
    const Posed& scanner_pose, const SliceConfig& config) {
  validate_config(config);
  const Eigen::Vector3d center = scanner_pose.camera_center();
  const double heading = euler_from_pose(scanner_pose).yaw;

  std::vector<std::pair<std::string, Posed>> cutouts;
  cutouts.reserve(static_cast<std::size_t>(config.cutouts_per_scan()));
  int index = 0;
  for (const double pitch : config.pitch_ring_deg) {
    for (int yi = 0; yi < config.yaw_count; ++yi) {
      EulerAnglesd angles;
      angles.yaw = heading + yi * config.yaw_stride_deg;
      angles.pitch = pitch;
      angles.roll = 0.0;
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "%03d", index);
      cutouts.emplace_back(suffix, pose_from_euler(center, angles));
      ++index;
    }
  }
  return cutouts;
}

std::pair<PointCloud, std::vector<std::uint32_t>> filter_frustum(
    const PointCloud& cloud, const Posed& pose, const CameraIntrinsicsd& intrinsics,
    const RenderParams& params) {
  // Cone around the optical axis wide enough that any point able to splat
  // into the image survives the filter: half-diagonal plus splat radius plus
  // rounding slack, measured in pixels at the focal plane.
  const double half_diag_px =
      std::hypot(intrinsics.width / 2.0, intrinsics.height / 2.0);
  const double max_angle =
      std::atan2(half_diag_px + params.splat_radius + 2.0, intrinsics.focal_px);
  const double cos_max = std::cos(max_angle);

  const Eigen::Vector3d center = pose.camera_center();
  const Eigen::Vector3d forward = pose.rotation.row(2).transpose();

  std::vector<std::uint32_t> indices;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d dir = cloud.positions.col(i) - center;
    const double norm = dir.norm();
    if (norm == 0.0 || forward.dot(dir) >= cos_max * norm) {
      indices.push_back(static_cast<std::uint32_t>(i));
    }
  }

  PointCloud subset;
  subset.scan_id = cloud.scan_id;
  subset.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    subset.positions.col(static_cast<Eigen::Index>(k)) =
        cloud.positions.col(indices[k]);
    subset.colors.col(static_cast<Eigen::Index>(k)) = cloud.colors.col(indices[k]);
  }
  return {std::move(subset), std::move(indices)};
}

SliceReport slice_scan(const PointCloud& cloud, const Posed& scanner_pose,
                       const SliceConfig& config,
                       const std::function<void(CutoutResult&&)>& sink, int workers) {
  if (cloud.empty()) {
    throw std::invalid_argument("slice_scan: empty point cloud");
  }
  validate_config(config);
  const CameraIntrinsicsd intrinsics =
      intrinsics_from_fov(config.hfov_deg, config.width, config.height);
  const auto cutouts = generate_cutout_poses(scanner_pose, config);

  SliceReport report;
  double missing_sum = 0.0;
  std::mutex mutex;

  parallel_for(static_cast<std::int64_t>(cutouts.size()), workers,
               [&](std::int64_t begin, std::int64_t end) {
                 for (std::int64_t c = begin; c < end; ++c) {
                   const auto& [suffix, pose] = cutouts[static_cast<std::size_t>(c)];
                   const std::string image_id = cloud.scan_id + "_" + suffix;
                   auto [subset, indices] =
                       filter_frustum(cloud, pose, intrinsics, config.render);
                   if (subset.empty()) {
                     const std::lock_guard<std::mutex> lock(mutex);
                     ++report.skipped;
                     report.skipped_ids.push_back(image_id);
                     continue;
                   }
                   RawRender raw = render(subset, pose, intrinsics, config.render,
                                          /*workers=*/1, &indices);
                   if (raw.missing_fraction >= 1.0) {
                     const std::lock_guard<std::mutex> lock(mutex);
                     ++report.skipped;
                     report.skipped_ids.push_back(image_id);
                     continue;
                   }
                   CutoutResult result;
                   result.image_id = image_id;
                   result.pre_fill_missing = raw.missing_fraction;
                   result.image = fill_holes(raw, config.render, /*workers=*/1);
                   result.image.image_id = image_id;
                   {
                     const std::lock_guard<std::mutex> lock(mutex);
                     ++report.rendered;
                     missing_sum += raw.missing_fraction;
                   }
                   sink(std::move(result));
                 }
               });

  std::sort(report.skipped_ids.begin(), report.skipped_ids.end());
  report.mean_missing_fraction =
      report.rendered > 0 ? missing_sum / report.rendered : 0.0;
  return report;
}

std::vector<RgbdImage> slice_scan(const PointCloud& cloud, const Posed& scanner_pose,
                                  const SliceConfig& config, int workers) {
  std::vector<RgbdImage> images;
  std::mutex mutex;
  slice_scan(
      cloud, scanner_pose, config,
      [&](CutoutResult&& result) {
        const std::lock_guard<std::mutex> lock(mutex);
        images.push_back(std::move(result.image));
      },
      workers);
  std::sort(images.begin(), images.end(),
            [](const RgbdImage& a, const RgbdImage& b) { return a.image_id < b.image_id; });
  return images;
}

}  // namespace tbpos
