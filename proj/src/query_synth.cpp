#include "tbpos/query_synth.hpp"

#include "tbpos/parallel.hpp"
#include "tbpos/ply_io.hpp"
#include "tbpos/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace tbpos {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

OcclusionSpec::OcclusionSpec(const std::array<Eigen::Vector2d, 4>& verts,
                             const std::array<std::uint8_t, 3>& fill, double target)
    : vertices(verts), fill_rgb(fill), target_fraction(target) {
  if (!(target_fraction >= 0.01 && target_fraction <= 0.50)) {
    throw std::invalid_argument("OcclusionSpec: target fraction outside [0.01, 0.50]");
  }
  int positive = 0;
  int negative = 0;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d& a = vertices[static_cast<std::size_t>(i)];
    const Eigen::Vector2d& b = vertices[static_cast<std::size_t>((i + 1) % 4)];
    const Eigen::Vector2d& c = vertices[static_cast<std::size_t>((i + 2) % 4)];
    const double z = cross2(b - a, c - b);
    if (z > 0.0) {
      ++positive;
    } else if (z < 0.0) {
      ++negative;
    }
  }
  if (positive != 4 && negative != 4) {
    throw std::invalid_argument("OcclusionSpec: vertices are not strictly convex");
  }
  if (negative == 4) {
    std::swap(vertices[1], vertices[3]);  // normalize winding
  }
}

Posed sample_query_pose(const Posed& scanner_pose, const SamplingLimits& limits, Rng& rng) {
  if (limits.max_horizontal_offset < 0.0 || limits.max_vertical_offset < 0.0) {
    throw std::invalid_argument("sample_query_pose: offsets must be non-negative");
  }
  if (!(limits.pitch_limit_deg >= 0.0) || !(limits.pitch_limit_deg < 90.0)) {
    throw std::invalid_argument("sample_query_pose: pitch limit must lie in [0, 90) deg");
  }
  const Eigen::Vector3d scanner_center = scanner_pose.camera_center();
  Eigen::Vector3d center = scanner_center;
  center.x() += rng.uniform(-limits.max_horizontal_offset, limits.max_horizontal_offset);
  center.y() += rng.uniform(-limits.max_horizontal_offset, limits.max_horizontal_offset);
  center.z() += rng.uniform(-limits.max_vertical_offset, limits.max_vertical_offset);
  EulerAnglesd angles;
  angles.yaw = rng.uniform(limits.yaw_min_deg, limits.yaw_max_deg);
  angles.pitch = rng.uniform(-limits.pitch_limit_deg, limits.pitch_limit_deg);
  angles.roll = rng.uniform(-limits.roll_limit_deg, limits.roll_limit_deg);
  return pose_from_euler(center, angles);
}

PointCloud apply_flashlight(const PointCloud& cloud, const Eigen::Vector3d& camera_center,
                            const FlashlightParams& params) {
  if (!(params.gain > 0.0) || !(params.half_distance > 0.0)) {
    throw std::invalid_argument("apply_flashlight: gain and half_distance must be positive");
  }
  PointCloud out;
  out.scan_id = cloud.scan_id;
  out.positions = cloud.positions;
  out.colors.resize(3, cloud.size());
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const double d = (cloud.positions.col(i) - camera_center).norm();
    const double ratio = d / params.half_distance;
    const double factor = params.gain / (1.0 + ratio * ratio);
    for (int c = 0; c < 3; ++c) {
      const double v = std::round(static_cast<double>(cloud.colors(c, i)) * factor);
      out.colors(c, i) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

std::optional<OcclusionResult> apply_occlusion(const RgbdImage& image,
                                               const OcclusionSpec& spec) {
  const int width = image.width();
  const int height = image.height();
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("apply_occlusion: empty image");
  }

  double min_x = spec.vertices[0].x(), max_x = spec.vertices[0].x();
  double min_y = spec.vertices[0].y(), max_y = spec.vertices[0].y();
  for (const auto& v : spec.vertices) {
    min_x = std::min(min_x, v.x());
    max_x = std::max(max_x, v.x());
    min_y = std::min(min_y, v.y());
    max_y = std::max(max_y, v.y());
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y)));

  // Pixel (x, y) is covered when its center (x+0.5, y+0.5) lies inside the
  // polygon; clipping to the bounds happens implicitly.
  const auto inside = [&](double px, double py) {
    for (int i = 0; i < 4; ++i) {
      const Eigen::Vector2d& a = spec.vertices[static_cast<std::size_t>(i)];
      const Eigen::Vector2d& b = spec.vertices[static_cast<std::size_t>((i + 1) % 4)];
      if (cross2(b - a, Eigen::Vector2d(px - a.x(), py - a.y())) < 0.0) {
        return false;
      }
    }
    return true;
  };

  std::vector<std::pair<int, int>> covered;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (inside(x + 0.5, y + 0.5)) {
        covered.emplace_back(x, y);
      }
    }
  }
  const double realized = static_cast<double>(covered.size()) /
                          (static_cast<double>(width) * static_cast<double>(height));
  if (realized < 0.01 || realized > 0.50) {
    return std::nullopt;
  }

  OcclusionResult result;
  result.image = image;
  result.realized_fraction = realized;
  for (const auto& [x, y] : covered) {
    for (int c = 0; c < 3; ++c) {
      result.image.rgb.at(x, y, c) = spec.fill_rgb[static_cast<std::size_t>(c)];
    }
    result.image.depth.at(x, y) = 0.0f;  // the occluder has unknown range
    result.image.valid_mask.at(x, y) = 0;
  }
  return result;
}

RgbdImage apply_noise(const RgbdImage& image, double sigma, Rng& rng) {
  if (sigma < 0.0) {
    throw std::invalid_argument("apply_noise: sigma must be non-negative");
  }
  RgbdImage out = image;
  if (sigma == 0.0) {
    return out;
  }
  const std::size_t values = out.rgb.value_count();
  for (std::size_t i = 0; i < values; ++i) {
    const double v = static_cast<double>(out.rgb.data()[i]) + sigma * rng.next_gaussian();
    out.rgb.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
  }
  return out;
}

OcclusionSpec sample_occlusion_spec(Rng& rng, int width, int height) {
  const double target = rng.uniform(0.01, 0.50);
  const Eigen::Vector2d center(rng.uniform(0.0, width), rng.uniform(0.0, height));
  const double base = rng.uniform(0.0, 360.0);
  std::array<double, 4> angles;
  for (int i = 0; i < 4; ++i) {
    angles[static_cast<std::size_t>(i)] =
        deg_to_rad(base + 90.0 * i + rng.uniform(-25.0, 25.0));
  }
  std::array<double, 4> radii;
  for (auto& r : radii) {
    r = rng.uniform(0.5, 1.0);
  }
  // Fan area around the center for unit scale, then scale radii to meet the
  // target pixel area.
  double unit_area = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double a0 = angles[static_cast<std::size_t>(i)];
    const double a1 = angles[static_cast<std::size_t>((i + 1) % 4)];
    const double sweep = i == 3 ? a1 + 2.0 * kPi - a0 : a1 - a0;
    unit_area += 0.5 * radii[static_cast<std::size_t>(i)] *
                 radii[static_cast<std::size_t>((i + 1) % 4)] * std::sin(sweep);
  }
  const double scale =
      std::sqrt(target * width * height / std::max(unit_area, 1e-12));
  std::array<Eigen::Vector2d, 4> vertices;
  for (int i = 0; i < 4; ++i) {
    const double r = scale * radii[static_cast<std::size_t>(i)];
    vertices[static_cast<std::size_t>(i)] =
        center + r * Eigen::Vector2d(std::cos(angles[static_cast<std::size_t>(i)]),
                                     std::sin(angles[static_cast<std::size_t>(i)]));
  }
  std::array<std::uint8_t, 3> fill{};
  for (auto& c : fill) {
    c = static_cast<std::uint8_t>(10 + rng.next_below(51));  // flat dark color
  }
  return OcclusionSpec(vertices, fill, target);
}

namespace {

std::string query_id_for(int index, int count) {
  int digits = 3;
  for (int v = count - 1; v >= 1000; v /= 10) {
    ++digits;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "q%0*d", digits, index);
  return buf;
}

}  // namespace

SynthesisReport synthesize_queries(const ScanRegistry& registry, int count,
                                   const SynthConfig& config, std::uint64_t master_seed,
                                   const std::function<void(const RgbdImage&)>& sink,
                                   int workers) {
  if (registry.entries.empty()) {
    throw std::invalid_argument("synthesize_queries: empty scan registry");
  }
  if (count <= 0) {
    throw std::invalid_argument("synthesize_queries: query count must be positive");
  }
  if (config.occlusion_probability < 0.0 || config.occlusion_probability > 1.0) {
    throw std::invalid_argument("synthesize_queries: occlusion probability outside [0, 1]");
  }
  const CameraIntrinsicsd intrinsics =
      intrinsics_from_fov(config.hfov_deg, config.width, config.height);

  // Clouds load lazily and stay cached; queries hit scans round-robin so all
  // referenced scans end up resident.
  std::vector<PointCloud> clouds(registry.entries.size());
  std::vector<std::unique_ptr<std::mutex>> cloud_mutexes;
  for (std::size_t i = 0; i < registry.entries.size(); ++i) {
    cloud_mutexes.push_back(std::make_unique<std::mutex>());
  }
  const auto cloud_for = [&](std::size_t scan_index) -> const PointCloud& {
    const std::lock_guard<std::mutex> lock(*cloud_mutexes[scan_index]);
    if (clouds[scan_index].empty()) {
      clouds[scan_index] = load_ply(registry.entries[scan_index].cloud_path);
      clouds[scan_index].scan_id = registry.entries[scan_index].scan_id;
    }
    return clouds[scan_index];
  };

  std::vector<std::optional<QueryRecord>> records(static_cast<std::size_t>(count));
  std::vector<std::optional<SkippedQuery>> skips(static_cast<std::size_t>(count));
  std::mutex report_mutex;
  int occluded_total = 0;
  int flashlit_total = 0;

  parallel_for(count, workers, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t qi = begin; qi < end; ++qi) {
      const std::size_t scan_index =
          static_cast<std::size_t>(qi) % registry.entries.size();
      const ScanEntry& scan = registry.entries[scan_index];
      const PointCloud& cloud = cloud_for(scan_index);
      const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(qi));
      Rng rng(seed);
      const std::string query_id = query_id_for(static_cast<int>(qi), count);

      std::optional<RawRender> raw;
      Posed pose;
      for (int attempt = 0; attempt < config.limits.max_attempts; ++attempt) {
        pose = sample_query_pose(scan.scanner_pose, config.limits, rng);
        auto [subset, indices] = filter_frustum(cloud, pose, intrinsics, config.render);
        if (subset.empty()) {
          continue;
        }
        if (config.flashlight.enabled) {
          subset = apply_flashlight(subset, pose.camera_center(), config.flashlight);
        }
        RawRender candidate =
            render(subset, pose, intrinsics, config.render, /*workers=*/1, &indices);
        // A view with no data at all can never be filled, whatever the gate.
        if (candidate.missing_fraction < 1.0 &&
            quality_gate(candidate, config.limits.max_missing)) {
          raw = std::move(candidate);
          break;
        }
      }
      if (!raw) {
        skips[static_cast<std::size_t>(qi)] = SkippedQuery{query_id, seed};
        continue;
      }

      RgbdImage image = fill_holes(*raw, config.render, /*workers=*/1);
      image.image_id = query_id;

      QueryRecord record;
      record.query_id = query_id;
      record.scan_id = scan.scan_id;
      record.gt_pose = pose;
      record.seed = seed;
      record.missing_fraction = raw->missing_fraction;
      record.flashlight = config.flashlight.enabled;
      if (record.flashlight) {
        record.flashlight_gain = config.flashlight.gain;
        record.flashlight_half_distance = config.flashlight.half_distance;
      }
      record.noise_sigma = config.noise_sigma;

      if (rng.next_double() < config.occlusion_probability) {
        for (int attempt = 0; attempt < 20; ++attempt) {
          const OcclusionSpec spec = sample_occlusion_spec(rng, config.width, config.height);
          const auto occluded = apply_occlusion(image, spec);
          if (occluded) {
            image = occluded->image;
            record.occlusion = true;
            record.occlusion_fraction = occluded->realized_fraction;
            for (int v = 0; v < 4; ++v) {
              record.occlusion_polygon[static_cast<std::size_t>(2 * v)] =
                  spec.vertices[static_cast<std::size_t>(v)].x();
              record.occlusion_polygon[static_cast<std::size_t>(2 * v + 1)] =
                  spec.vertices[static_cast<std::size_t>(v)].y();
            }
            record.occlusion_rgb = spec.fill_rgb;
            break;
          }
        }
      }

      if (config.noise_sigma > 0.0) {
        image = apply_noise(image, config.noise_sigma, rng);
      }

      sink(image);
      {
        const std::lock_guard<std::mutex> lock(report_mutex);
        occluded_total += record.occlusion ? 1 : 0;
        flashlit_total += record.flashlight ? 1 : 0;
      }
      records[static_cast<std::size_t>(qi)] = std::move(record);
    }
  });

  SynthesisReport report;
  for (auto& rec : records) {
    if (rec) {
      report.manifest.records.push_back(std::move(*rec));
    }
  }
  for (auto& skip : skips) {
    if (skip) {
      report.skipped.push_back(std::move(*skip));
    }
  }
  report.written = static_cast<int>(report.manifest.records.size());
  report.occluded = occluded_total;
  report.flashlit = flashlit_total;
  return report;
}

}  // namespace tbpos
