#include "tbpos/render.hpp"

#include "tbpos/parallel.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace tbpos {

namespace {

// Positive finite floats order the same as their bit patterns, so a CAS loop
// on the bits implements an associative per-pixel min.
inline void atomic_min_u32(std::atomic<std::uint32_t>& slot, std::uint32_t value) {
  std::uint32_t current = slot.load(std::memory_order_relaxed);
  while (value < current &&
         !slot.compare_exchange_weak(current, value, std::memory_order_relaxed)) {
  }
}

inline std::uint32_t float_bits(float f) { return std::bit_cast<std::uint32_t>(f); }
inline float bits_float(std::uint32_t b) { return std::bit_cast<float>(b); }

struct Projection {
  int cu = 0;
  int cv = 0;
  float z = 0.0f;
  bool visible = false;
};

inline Projection project_point(const Eigen::Matrix3d& rot,
                                const Eigen::Vector3d& trans,
                                const CameraIntrinsicsd& intr, double z_near,
                                int splat_radius, const Eigen::Vector3d& p) {
  Projection out;
  const Eigen::Vector3d cam = rot * p + trans;
  if (!(cam.z() >= z_near)) {
    return out;
  }
  const double u = intr.focal_px * cam.x() / cam.z() + intr.cx();
  const double v = intr.focal_px * cam.y() / cam.z() + intr.cy();
  if (!std::isfinite(u) || !std::isfinite(v) || std::abs(u) > 1e9 || std::abs(v) > 1e9) {
    return out;
  }
  const long cu = std::lround(u);
  const long cv = std::lround(v);
  if (cu + splat_radius < 0 || cu - splat_radius >= intr.width ||
      cv + splat_radius < 0 || cv - splat_radius >= intr.height) {
    return out;
  }
  out.cu = static_cast<int>(cu);
  out.cv = static_cast<int>(cv);
  out.z = static_cast<float>(cam.z());
  out.visible = true;
  return out;
}

void validate_params(const RenderParams& params) {
  if (!(params.z_near > 0.0)) {
    throw std::invalid_argument("render: z_near must be positive");
  }
  if (params.splat_radius < 0 || params.splat_radius > 3) {
    throw std::invalid_argument("render: splat_radius must lie in [0, 3]");
  }
  if (params.depth_tie_epsilon < 0.0) {
    throw std::invalid_argument("render: depth_tie_epsilon must be non-negative");
  }
}

}  // namespace

RawRender render(const PointCloud& cloud, const Posed& pose,
                 const CameraIntrinsicsd& intrinsics, const RenderParams& params,
                 int workers, const std::vector<std::uint32_t>* original_indices) {
  if (cloud.empty()) {
    throw std::invalid_argument("render: empty point cloud");
  }
  if (intrinsics.width < 2 || intrinsics.height < 2 || !(intrinsics.focal_px > 0.0)) {
    throw std::invalid_argument("render: invalid intrinsics");
  }
  validate_params(params);
  const std::int64_t n = cloud.size();
  if (n >= static_cast<std::int64_t>(kNoPoint)) {
    throw std::invalid_argument("render: cloud exceeds the supported point count");
  }
  if (original_indices && static_cast<std::int64_t>(original_indices->size()) != n) {
    throw std::invalid_argument("render: original_indices size mismatch");
  }

  const int width = intrinsics.width;
  const int height = intrinsics.height;
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const int radius = params.splat_radius;
  const Eigen::Matrix3d rot = pose.rotation;
  const Eigen::Vector3d trans = pose.translation;

  auto z_bits = std::make_unique<std::atomic<std::uint32_t>[]>(pixels);
  auto winner = std::make_unique<std::atomic<std::uint32_t>[]>(pixels);
  const std::uint32_t inf_bits = float_bits(std::numeric_limits<float>::infinity());
  parallel_for(static_cast<std::int64_t>(pixels), workers,
               [&](std::int64_t begin, std::int64_t end) {
                 for (std::int64_t i = begin; i < end; ++i) {
                   z_bits[i].store(inf_bits, std::memory_order_relaxed);
                   winner[i].store(kNoPoint, std::memory_order_relaxed);
                 }
               });

  // Pass 1: per-pixel minimum candidate depth.
  parallel_for(n, workers, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const Projection pr = project_point(rot, trans, intrinsics, params.z_near,
                                          radius, cloud.positions.col(i));
      if (!pr.visible) {
        continue;
      }
      const std::uint32_t zb = float_bits(pr.z);
      for (int dv = -radius; dv <= radius; ++dv) {
        const int y = pr.cv + dv;
        if (y < 0 || y >= height) {
          continue;
        }
        for (int du = -radius; du <= radius; ++du) {
          const int x = pr.cu + du;
          if (x < 0 || x >= width) {
            continue;
          }
          atomic_min_u32(z_bits[static_cast<std::size_t>(y) * width + x], zb);
        }
      }
    }
  });

  // Pass 2: lowest point index among candidates within depth_tie_epsilon of
  // the minimum. Tie-breaking uses parent-cloud indices when a filtered
  // subset is being rendered; `original_indices` is strictly increasing, so
  // minimizing the local column minimizes the parent index as well.
  const double eps = params.depth_tie_epsilon;
  parallel_for(n, workers, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const Projection pr = project_point(rot, trans, intrinsics, params.z_near,
                                          radius, cloud.positions.col(i));
      if (!pr.visible) {
        continue;
      }
      for (int dv = -radius; dv <= radius; ++dv) {
        const int y = pr.cv + dv;
        if (y < 0 || y >= height) {
          continue;
        }
        for (int du = -radius; du <= radius; ++du) {
          const int x = pr.cu + du;
          if (x < 0 || x >= width) {
            continue;
          }
          const std::size_t px = static_cast<std::size_t>(y) * width + x;
          const float z_min = bits_float(z_bits[px].load(std::memory_order_relaxed));
          if (static_cast<double>(pr.z) <= static_cast<double>(z_min) + eps) {
            atomic_min_u32(winner[px], static_cast<std::uint32_t>(i));
          }
        }
      }
    }
  });

  // Pass 3: resolve winners into the output rasters.
  RawRender out;
  out.rgb = RgbRaster(width, height, 3, 0);
  out.depth = DepthRaster(width, height, 1, 0.0f);
  out.valid_mask = MaskRaster(width, height, 1, 0);
  out.point_index = Raster<std::uint32_t>(width, height, 1, kNoPoint);
  out.pose = pose;
  out.intrinsics = intrinsics;

  std::atomic<std::int64_t> valid_count{0};
  parallel_for(static_cast<std::int64_t>(pixels), workers,
               [&](std::int64_t begin, std::int64_t end) {
                 std::int64_t local_valid = 0;
                 for (std::int64_t px = begin; px < end; ++px) {
                   const std::uint32_t w = winner[px].load(std::memory_order_relaxed);
                   if (w == kNoPoint) {
                     continue;
                   }
                   const Eigen::Vector3d cam =
                       rot * cloud.positions.col(w) + trans;
                   const std::size_t base = static_cast<std::size_t>(px) * 3;
                   out.rgb.data()[base + 0] = cloud.colors(0, w);
                   out.rgb.data()[base + 1] = cloud.colors(1, w);
                   out.rgb.data()[base + 2] = cloud.colors(2, w);
                   out.depth.data()[px] = static_cast<float>(cam.z());
                   out.valid_mask.data()[px] = 1;
                   out.point_index.data()[px] =
                       original_indices ? (*original_indices)[w] : w;
                   ++local_valid;
                 }
                 valid_count.fetch_add(local_valid, std::memory_order_relaxed);
               });

  out.missing_fraction =
      static_cast<double>(static_cast<std::int64_t>(pixels) - valid_count.load()) /
      static_cast<double>(pixels);
  return out;
}

RgbdImage fill_holes(const RawRender& raw, const RenderParams& params, int workers) {
  const int width = raw.rgb.width();
  const int height = raw.rgb.height();
  if (width == 0 || height == 0) {
    throw std::invalid_argument("fill_holes: empty render");
  }
  if (params.max_fill_iterations < 0) {
    throw std::invalid_argument("fill_holes: max_fill_iterations must be non-negative");
  }

  RgbdImage image;
  image.rgb = raw.rgb;
  image.depth = raw.depth;
  image.valid_mask = raw.valid_mask;
  image.pose = raw.pose;
  image.intrinsics = raw.intrinsics;

  const std::size_t pixels = image.rgb.pixel_count();
  std::int64_t invalid_count = 0;
  for (std::size_t px = 0; px < pixels; ++px) {
    if (!image.valid_mask.data()[px]) {
      ++invalid_count;
    }
  }
  if (invalid_count == static_cast<std::int64_t>(pixels)) {
    throw std::invalid_argument("fill_holes: render has no valid pixels");
  }

  constexpr int kDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  constexpr int kDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};

  // queued marks pixels already on the frontier; each pixel is filled at most
  // once, so the flag never needs resetting.
  MaskRaster queued(width, height, 1, 0);
  std::vector<std::int64_t> frontier;
  const auto has_valid_neighbor = [&](int x, int y) {
    for (int k = 0; k < 8; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (image.valid_mask.contains(nx, ny) && image.valid_mask.at(nx, ny)) {
        return true;
      }
    }
    return false;
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!image.valid_mask.at(x, y) && has_valid_neighbor(x, y)) {
        queued.at(x, y) = 1;
        frontier.push_back(static_cast<std::int64_t>(y) * width + x);
      }
    }
  }

  std::vector<std::int64_t> next_frontier;
  for (int iter = 0; iter < params.max_fill_iterations && !frontier.empty(); ++iter) {
    // Synchronous update: sources are pixels valid before this iteration and
    // targets are invalid ones, so in-place writes cannot alias a source.
    parallel_for(static_cast<std::int64_t>(frontier.size()), workers,
                 [&](std::int64_t begin, std::int64_t end) {
                   for (std::int64_t f = begin; f < end; ++f) {
                     const std::int64_t px = frontier[static_cast<std::size_t>(f)];
                     const int x = static_cast<int>(px % width);
                     const int y = static_cast<int>(px / width);
                     double sum[3] = {0, 0, 0};
                     double lo[3], hi[3];
                     double depth_sum = 0, depth_lo = 0, depth_hi = 0;
                     int count = 0;
                     for (int k = 0; k < 8; ++k) {
                       const int nx = x + kDx[k];
                       const int ny = y + kDy[k];
                       if (!image.valid_mask.contains(nx, ny) ||
                           !image.valid_mask.at(nx, ny)) {
                         continue;
                       }
                       const double d = image.depth.at(nx, ny);
                       if (count == 0) {
                         depth_lo = depth_hi = d;
                         for (int c = 0; c < 3; ++c) {
                           lo[c] = hi[c] = image.rgb.at(nx, ny, c);
                         }
                       } else {
                         depth_lo = std::min(depth_lo, d);
                         depth_hi = std::max(depth_hi, d);
                         for (int c = 0; c < 3; ++c) {
                           const double v = image.rgb.at(nx, ny, c);
                           lo[c] = std::min(lo[c], v);
                           hi[c] = std::max(hi[c], v);
                         }
                       }
                       depth_sum += d;
                       for (int c = 0; c < 3; ++c) {
                         sum[c] += image.rgb.at(nx, ny, c);
                       }
                       ++count;
                     }
                     for (int c = 0; c < 3; ++c) {
                       const double mean = sum[c] / count;
                       image.rgb.at(x, y, c) = static_cast<std::uint8_t>(
                           std::lround(std::clamp(mean, lo[c], hi[c])));
                     }
                     image.depth.at(x, y) = static_cast<float>(
                         std::clamp(depth_sum / count, depth_lo, depth_hi));
                   }
                 });

    for (const std::int64_t px : frontier) {
      image.valid_mask.data()[px] = 1;
    }
    invalid_count -= static_cast<std::int64_t>(frontier.size());

    next_frontier.clear();
    for (const std::int64_t px : frontier) {
      const int x = static_cast<int>(px % width);
      const int y = static_cast<int>(px / width);
      for (int k = 0; k < 8; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (image.valid_mask.contains(nx, ny) && !image.valid_mask.at(nx, ny) &&
            !queued.at(nx, ny)) {
          queued.at(nx, ny) = 1;
          next_frontier.push_back(static_cast<std::int64_t>(ny) * width + nx);
        }
      }
    }
    frontier.swap(next_frontier);
  }

  // Survivors stay invalid.
  if (invalid_count > 0) {
    for (std::size_t px = 0; px < pixels; ++px) {
      if (!image.valid_mask.data()[px]) {
        image.depth.data()[px] = 0.0f;
        image.rgb.data()[px * 3 + 0] = 0;
        image.rgb.data()[px * 3 + 1] = 0;
        image.rgb.data()[px * 3 + 2] = 0;
      }
    }
  }
  return image;
}

bool quality_gate(const RawRender& raw, double max_missing) {
  if (max_missing < 0.0 || max_missing > 1.0) {
    throw std::invalid_argument("quality_gate: max_missing must lie in [0, 1]");
  }
  return raw.missing_fraction <= max_missing;
}

Eigen::Vector3d unproject(const RgbdImage& image, int u, int v) {
  if (!image.valid_mask.contains(u, v)) {
    throw std::invalid_argument("unproject: pixel out of bounds");
  }
  if (!image.valid_mask.at(u, v) || !(image.depth.at(u, v) > 0.0f)) {
    throw std::invalid_argument("unproject: pixel has no valid depth");
  }
  const double depth = image.depth.at(u, v);
  const Eigen::Vector3d cam = image.intrinsics.backproject(
      static_cast<double>(u), static_cast<double>(v), depth);
  return image.pose.to_world(cam);
}

}  // namespace tbpos
