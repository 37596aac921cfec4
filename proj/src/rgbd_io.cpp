#include "tbpos/rgbd_io.hpp"

#include "tbpos/errors.hpp"
#include "tbpos/png_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace tbpos {

namespace {

constexpr double kPoseOrthoTol = 1e-6;

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_pose_text(const Posed& pose, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_pose_text: cannot open " + path.string());
  }
  out << "CFW\n";
  for (int r = 0; r < 3; ++r) {
    out << format_full(pose.rotation(r, 0)) << ' ' << format_full(pose.rotation(r, 1))
        << ' ' << format_full(pose.rotation(r, 2)) << ' '
        << format_full(pose.translation(r)) << '\n';
  }
  if (!out) {
    throw IoError("write_pose_text: write failed for " + path.string());
  }
}

Posed read_pose_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_pose_text: cannot open " + path.string());
  }
  std::string token;
  if (!(in >> token) || token != "CFW") {
    throw ParseError(path.string() + ": expected leading CFW marker");
  }
  double v[12];
  for (int i = 0; i < 12; ++i) {
    if (!(in >> v[i])) {
      throw ParseError(path.string() + ": expected 12 numbers after CFW, got " +
                       std::to_string(i));
    }
  }
  Posed pose;
  pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
  pose.translation << v[3], v[7], v[11];
  if (!is_rotation(pose.rotation, kPoseOrthoTol)) {
    throw ParseError(path.string() + ": rotation is not orthonormal within 1e-6");
  }
  // Already clean to write precision stays bit-identical across a round trip.
  if (orthonormality_error(pose.rotation) > 1e-12) {
    pose.rotation = orthonormalize(pose.rotation);
  }
  return pose;
}

RgbdWriteStats write_rgbd(const RgbdImage& image, const std::filesystem::path& dir) {
  const int width = image.rgb.width();
  const int height = image.rgb.height();
  if (width <= 0 || height <= 0 || image.rgb.channels() != 3) {
    throw std::invalid_argument("write_rgbd: empty or non-RGB image");
  }
  if (image.depth.width() != width || image.depth.height() != height ||
      image.valid_mask.width() != width || image.valid_mask.height() != height) {
    throw std::invalid_argument("write_rgbd: raster dimensions disagree");
  }
  if (image.intrinsics.width != width || image.intrinsics.height != height) {
    throw std::invalid_argument("write_rgbd: intrinsics resolution disagrees with rasters");
  }
  if (image.image_id.empty()) {
    throw std::invalid_argument("write_rgbd: missing image_id");
  }

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  RgbdWriteStats stats;
  Raster<std::uint16_t> depth_mm(width, height, 1, 0);
  const std::size_t pixels = image.depth.pixel_count();
  for (std::size_t px = 0; px < pixels; ++px) {
    const float d = image.depth.data()[px];
    if (!image.valid_mask.data()[px] || !(d > 0.0f)) {
      continue;
    }
    const long long mm = std::llround(static_cast<double>(d) * 1000.0);
    if (mm > 65535) {
      depth_mm.data()[px] = 65535;
      ++stats.saturated_depths;
    } else {
      depth_mm.data()[px] = static_cast<std::uint16_t>(mm);
    }
  }

  write_png_rgb8(dir / (image.image_id + ".rgb.png"), image.rgb);
  write_png_gray16(dir / (image.image_id + ".depth.png"), depth_mm);
  write_pose_text(image.pose, dir / (image.image_id + ".pose.txt"));
  return stats;
}

RgbdImage read_rgbd(const std::filesystem::path& dir, const std::string& image_id,
                    const CameraIntrinsicsd& intrinsics) {
  RgbdImage image;
  image.image_id = image_id;
  image.intrinsics = intrinsics;
  image.rgb = read_png_rgb8(dir / (image_id + ".rgb.png"));
  const Raster<std::uint16_t> depth_mm = read_png_gray16(dir / (image_id + ".depth.png"));
  if (depth_mm.width() != image.rgb.width() || depth_mm.height() != image.rgb.height()) {
    throw ParseError("read_rgbd: rgb and depth dimensions disagree for " + image_id);
  }
  if (intrinsics.width != image.rgb.width() || intrinsics.height != image.rgb.height()) {
    throw std::invalid_argument("read_rgbd: intrinsics resolution does not match " + image_id);
  }
  image.pose = read_pose_text(dir / (image_id + ".pose.txt"));
  image.depth = DepthRaster(depth_mm.width(), depth_mm.height(), 1, 0.0f);
  image.valid_mask = MaskRaster(depth_mm.width(), depth_mm.height(), 1, 0);
  for (std::size_t px = 0; px < depth_mm.pixel_count(); ++px) {
    const std::uint16_t mm = depth_mm.data()[px];
    if (mm > 0) {
      image.depth.data()[px] = static_cast<float>(mm) / 1000.0f;
      image.valid_mask.data()[px] = 1;
    }
  }
  return image;
}

}  // namespace tbpos
