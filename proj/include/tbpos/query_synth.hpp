#pragma once

#include "tbpos/manifest.hpp"
#include "tbpos/point_cloud.hpp"
#include "tbpos/raster.hpp"
#include "tbpos/registry.hpp"
#include "tbpos/render.hpp"
#include "tbpos/rng.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tbpos {

/// Ranges for the virtual-camera perturbation around a scanner position.
/// Translation offsets are per-axis uniform; yaw is an absolute world
/// heading; pitch and roll are symmetric around level.
struct SamplingLimits {
  double max_horizontal_offset = 2.0;  // meters, X and Y
  double max_vertical_offset = 1.0;    // meters, Z
  double yaw_min_deg = 0.0;
  double yaw_max_deg = 360.0;
  double pitch_limit_deg = 25.0;
  double roll_limit_deg = 15.0;
  double max_missing = 0.10;  // quality gate on the raw render
  int max_attempts = 50;      // pose resamples before a query is skipped
};

/// Distance-dependent brightness: factor g / (1 + (d/d0)^2), so points at the
/// camera overexpose by the gain and brightness halves the gain at d0.
struct FlashlightParams {
  double gain = 4.0;
  double half_distance = 3.0;  // meters
  bool enabled = true;
};

/// Convex occluder quadrangle with a flat fill color. Construction rejects
/// non-convex or degenerate vertex orderings.
struct OcclusionSpec {
  OcclusionSpec(const std::array<Eigen::Vector2d, 4>& vertices,
                const std::array<std::uint8_t, 3>& fill_rgb, double target_fraction);

  std::array<Eigen::Vector2d, 4> vertices;  // convex, consistent winding
  std::array<std::uint8_t, 3> fill_rgb{};
  double target_fraction = 0.0;  // in [0.01, 0.50]
};

/// Samples a perturbed virtual camera pose around the scanner center.
/// Deterministic for a given generator state.
Posed sample_query_pose(const Posed& scanner_pose, const SamplingLimits& limits,
                        Rng& rng);

/// Recolors a cloud as if lit from `camera_center` (see FlashlightParams);
/// geometry is untouched. The enabled flag is ignored here, callers gate on it.
PointCloud apply_flashlight(const PointCloud& cloud, const Eigen::Vector3d& camera_center,
                            const FlashlightParams& params);

struct OcclusionResult {
  RgbdImage image;
  double realized_fraction = 0.0;  // after clipping to the image bounds
};

/// Fills the occluder polygon (pixel centers inside it): color to fill_rgb,
/// depth to 0, mask invalid. Returns nullopt - a resample signal - when the
/// clipped polygon covers less than 1% or more than 50% of the image.
std::optional<OcclusionResult> apply_occlusion(const RgbdImage& image,
                                               const OcclusionSpec& spec);

/// Additive zero-mean Gaussian noise per channel, clamped to [0, 255]; depth
/// and mask untouched. sigma 0 returns the image unchanged.
RgbdImage apply_noise(const RgbdImage& image, double sigma, Rng& rng);

/// Random occluder: center uniform over the image, four vertices at roughly
/// 90-degree spacing (jittered), radii scaled so the polygon area hits a
/// target fraction drawn uniformly from [0.01, 0.50], and a flat dark fill
/// color. The result is convex by construction.
OcclusionSpec sample_occlusion_spec(Rng& rng, int width, int height);

struct SynthConfig {
  SamplingLimits limits;
  FlashlightParams flashlight;
  double occlusion_probability = 0.9;
  double noise_sigma = 0.0;
  double hfov_deg = 60.0;
  int width = 1024;
  int height = 768;
  RenderParams render;
};

struct SkippedQuery {
  std::string query_id;
  std::uint64_t seed = 0;
};

struct SynthesisReport {
  QueryManifest manifest;  // in query-index order
  int written = 0;
  std::vector<SkippedQuery> skipped;  // queries that exhausted max_attempts
  int occluded = 0;
  int flashlit = 0;
};

/// The full query synthesis pipeline: round-robin over scans, sample a pose,
/// apply the flashlight when enabled, render, gate on missing pixels
/// (resampling up to max_attempts), fill holes, occlude with the configured
/// probability, add noise, and hand the finished image to `sink`.
///
/// Per-query sub-seeds derive from master_seed via derive_seed(master, index),
/// so results are byte-identical for any worker count; the manifest is
/// assembled in query-index order. The sink must be thread-safe.
SynthesisReport synthesize_queries(const ScanRegistry& registry, int count,
                                   const SynthConfig& config, std::uint64_t master_seed,
                                   const std::function<void(const RgbdImage&)>& sink,
                                   int workers = 0);

}  // namespace tbpos
