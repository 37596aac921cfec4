#pragma once

#include "tbpos/raster.hpp"

#include <cstdint>
#include <filesystem>

namespace tbpos {

/// Thin libpng wrappers. Writers use a fixed filter/compression configuration
/// so identical rasters always produce identical files.

void write_png_rgb8(const std::filesystem::path& path, const RgbRaster& rgb);
RgbRaster read_png_rgb8(const std::filesystem::path& path);

void write_png_gray16(const std::filesystem::path& path, const Raster<std::uint16_t>& gray);
Raster<std::uint16_t> read_png_gray16(const std::filesystem::path& path);

}  // namespace tbpos
