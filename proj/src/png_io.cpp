#include "tbpos/png_io.hpp"

#include "tbpos/errors.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

namespace tbpos {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) {
      std::fclose(f);
    }
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp; every call below runs under a
// setjmp scope and converts the jump into an IoError after cleanup.

void write_png(const std::filesystem::path& path, int width, int height,
               int bit_depth, int color_type, const std::vector<png_bytep>& rows) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) {
    throw IoError("png: cannot open " + path.string() + " for writing");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    throw IoError("png: failed to allocate write struct");
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: failed to allocate info struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: write failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 1);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) {
    png_set_swap(png);  // rasters hold native little-endian samples
  }
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void read_png_header(png_structp png, png_infop info, const std::filesystem::path& path,
                     int expect_color_type, int expect_bit_depth) {
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type != expect_color_type || bit_depth != expect_bit_depth) {
    png_error(png, "unexpected color type or bit depth");
  }
  (void)path;
}

}  // namespace

void write_png_rgb8(const std::filesystem::path& path, const RgbRaster& rgb) {
  if (rgb.channels() != 3 || rgb.width() <= 0 || rgb.height() <= 0) {
    throw std::invalid_argument("write_png_rgb8: expected a non-empty 3-channel raster");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(rgb.height()));
  for (int y = 0; y < rgb.height(); ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * rgb.width() * 3);
  }
  write_png(path, rgb.width(), rgb.height(), 8, PNG_COLOR_TYPE_RGB, rows);
}

RgbRaster read_png_rgb8(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) {
    throw IoError("png: cannot open " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    throw IoError("png: failed to allocate read struct");
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: failed to allocate info struct");
  }
  RgbRaster out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: failed to read " + path.string());
  }
  png_init_io(png, file.get());
  read_png_header(png, info, path, PNG_COLOR_TYPE_RGB, 8);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  out = RgbRaster(width, height, 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        out.data() + static_cast<std::size_t>(y) * width * 3;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png_gray16(const std::filesystem::path& path, const Raster<std::uint16_t>& gray) {
  if (gray.channels() != 1 || gray.width() <= 0 || gray.height() <= 0) {
    throw std::invalid_argument("write_png_gray16: expected a non-empty 1-channel raster");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(gray.height()));
  for (int y = 0; y < gray.height(); ++y) {
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(reinterpret_cast<const png_byte*>(
        gray.data() + static_cast<std::size_t>(y) * gray.width()));
  }
  write_png(path, gray.width(), gray.height(), 16, PNG_COLOR_TYPE_GRAY, rows);
}

Raster<std::uint16_t> read_png_gray16(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) {
    throw IoError("png: cannot open " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    throw IoError("png: failed to allocate read struct");
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: failed to allocate info struct");
  }
  Raster<std::uint16_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: failed to read " + path.string());
  }
  png_init_io(png, file.get());
  read_png_header(png, info, path, PNG_COLOR_TYPE_GRAY, 16);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  png_set_swap(png);
  out = Raster<std::uint16_t>(width, height, 1);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = reinterpret_cast<png_byte*>(
        out.data() + static_cast<std::size_t>(y) * width);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace tbpos
