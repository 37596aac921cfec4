#pragma once

#include "tbpos/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tbpos {

/// Row-major raster with an arbitrary channel count. (x, y) indexes column x
/// of row y; interleaved channels.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, T fill = T())
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  T& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  bool contains(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::size_t value_count() const { return data_.size(); }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using RgbRaster = Raster<std::uint8_t>;   // 3 channels
using DepthRaster = Raster<float>;        // meters, 0 = invalid
using MaskRaster = Raster<std::uint8_t>;  // 1 = valid

/// Perspective RGBD view with pose and intrinsics. Depth 0 marks an invalid
/// pixel and the mask is false exactly there.
struct RgbdImage {
  RgbRaster rgb;
  DepthRaster depth;
  MaskRaster valid_mask;
  Posed pose;
  CameraIntrinsicsd intrinsics;
  std::string image_id;

  int width() const { return rgb.width(); }
  int height() const { return rgb.height(); }
};

}  // namespace tbpos
