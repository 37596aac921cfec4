#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tbpos/render.hpp"
#include "tbpos/rng.hpp"
#include "tbpos/slicer.hpp"
#include "test_util.hpp"

using namespace tbpos;

namespace {

PointCloud single_point(const Eigen::Vector3d& p, std::uint8_t r, std::uint8_t g,
                        std::uint8_t b) {
  PointCloud cloud;
  cloud.resize(1);
  cloud.positions.col(0) = p;
  cloud.colors.col(0) = Eigen::Matrix<std::uint8_t, 3, 1>(r, g, b);
  return cloud;
}

RenderParams no_splat() {
  RenderParams params;
  params.splat_radius = 0;
  return params;
}

/// Raw render built by hand for hole-fill fixtures: all-valid except where
/// masked out afterwards.
RawRender manual_raw(int width, int height) {
  RawRender raw;
  raw.rgb = RgbRaster(width, height, 3, 0);
  raw.depth = DepthRaster(width, height, 1, 0.0f);
  raw.valid_mask = MaskRaster(width, height, 1, 0);
  raw.point_index = Raster<std::uint32_t>(width, height, 1, kNoPoint);
  raw.intrinsics = intrinsics_from_fov(60.0, width, height);
  return raw;
}

void set_pixel(RawRender& raw, int x, int y, std::uint8_t value, float depth) {
  raw.rgb.at(x, y, 0) = value;
  raw.rgb.at(x, y, 1) = value;
  raw.rgb.at(x, y, 2) = value;
  raw.depth.at(x, y) = depth;
  raw.valid_mask.at(x, y) = 1;
}

void finish_missing_fraction(RawRender& raw) {
  std::size_t invalid = 0;
  for (std::size_t px = 0; px < raw.valid_mask.pixel_count(); ++px) {
    if (!raw.valid_mask.data()[px]) {
      ++invalid;
    }
  }
  raw.missing_fraction =
      static_cast<double>(invalid) / static_cast<double>(raw.valid_mask.pixel_count());
}

}  // namespace

TEST_CASE("optical-axis point lands on the principal pixel") {
  const auto intr = intrinsics_from_fov(60.0, 1024, 768);
  const PointCloud cloud = single_point({0, 0, 5}, 10, 20, 30);
  Posed identity;  // camera frame == world frame
  const RawRender raw = render(cloud, identity, intr, no_splat());
  CHECK(raw.valid_mask.at(512, 384) == 1);
  CHECK(raw.depth.at(512, 384) == 5.0f);
  CHECK(raw.rgb.at(512, 384, 0) == 10);
  CHECK(raw.point_index.at(512, 384) == 0);
  const std::size_t pixels = raw.valid_mask.pixel_count();
  CHECK(raw.missing_fraction ==
        static_cast<double>(pixels - 1) / static_cast<double>(pixels));
}

TEST_CASE("pinhole column: u = round(cx + f*x/z)") {
  const auto intr = intrinsics_from_fov(60.0, 1024, 768);
  const PointCloud cloud = single_point({1, 0, 5}, 200, 0, 0);
  Posed identity;
  const RawRender raw = render(cloud, identity, intr, no_splat());
  // 512 + 886.81/5 = 689.36 -> column 689
  CHECK(raw.valid_mask.at(689, 384) == 1);
  CHECK(raw.missing_fraction < 1.0);
}

TEST_CASE("z-buffer keeps the nearer point regardless of order") {
  const auto intr = intrinsics_from_fov(60.0, 64, 48);
  PointCloud cloud;
  cloud.resize(2);
  cloud.positions.col(0) = Eigen::Vector3d(0, 0, 4);
  cloud.positions.col(1) = Eigen::Vector3d(0, 0, 6);
  cloud.colors.col(0) = Eigen::Matrix<std::uint8_t, 3, 1>(1, 1, 1);
  cloud.colors.col(1) = Eigen::Matrix<std::uint8_t, 3, 1>(2, 2, 2);
  Posed identity;

  const RawRender near_first = render(cloud, identity, intr, no_splat());
  CHECK(near_first.depth.at(32, 24) == 4.0f);
  CHECK(near_first.rgb.at(32, 24, 0) == 1);

  PointCloud swapped;
  swapped.resize(2);
  swapped.positions.col(0) = cloud.positions.col(1);
  swapped.positions.col(1) = cloud.positions.col(0);
  swapped.colors.col(0) = cloud.colors.col(1);
  swapped.colors.col(1) = cloud.colors.col(0);
  const RawRender far_first = render(swapped, identity, intr, no_splat());
  CHECK(far_first.depth.at(32, 24) == 4.0f);
  CHECK(far_first.rgb.at(32, 24, 0) == 1);
}

TEST_CASE("depth ties go to the lower point index") {
  const auto intr = intrinsics_from_fov(60.0, 64, 48);
  PointCloud cloud;
  cloud.resize(2);
  cloud.positions.col(0) = Eigen::Vector3d(0, 0, 5.0 + 1e-7);  // within the tie epsilon
  cloud.positions.col(1) = Eigen::Vector3d(0, 0, 5.0);
  cloud.colors.col(0) = Eigen::Matrix<std::uint8_t, 3, 1>(11, 0, 0);
  cloud.colors.col(1) = Eigen::Matrix<std::uint8_t, 3, 1>(22, 0, 0);
  Posed identity;
  const RawRender raw = render(cloud, identity, intr, no_splat());
  CHECK(raw.rgb.at(32, 24, 0) == 11);
  CHECK(raw.point_index.at(32, 24) == 0);
}

TEST_CASE("points closer than z_near are discarded") {
  const auto intr = intrinsics_from_fov(60.0, 64, 48);
  const PointCloud cloud = single_point({0, 0, 0.05}, 5, 5, 5);
  Posed identity;
  const RawRender raw = render(cloud, identity, intr, no_splat());
  CHECK(raw.missing_fraction == 1.0);
}

TEST_CASE("splat radius covers a Chebyshev square") {
  const auto intr = intrinsics_from_fov(60.0, 64, 48);
  const PointCloud cloud = single_point({0, 0, 5}, 7, 7, 7);
  Posed identity;
  RenderParams params;
  params.splat_radius = 1;
  const RawRender raw = render(cloud, identity, intr, params);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      CHECK(raw.valid_mask.at(32 + dx, 24 + dy) == 1);
      CHECK(raw.depth.at(32 + dx, 24 + dy) == 5.0f);
    }
  }
  CHECK(raw.valid_mask.at(30, 24) == 0);
}

TEST_CASE("empty cloud is rejected") {
  const auto intr = intrinsics_from_fov(60.0, 64, 48);
  PointCloud empty;
  CHECK_THROWS_AS(render(empty, Posed{}, intr), std::invalid_argument);
}

TEST_CASE("render output is independent of the worker count") {
  const PointCloud room = tbpos::test::make_room_cloud(50000, 5);
  const auto intr = intrinsics_from_fov(60.0, 320, 240);
  const Posed pose = pose_from_euler<double>({0.3, -0.2, 1.5}, {35.0, 5.0, 2.0});
  const RawRender one = render(room, pose, intr, RenderParams{}, 1);
  const RawRender two = render(room, pose, intr, RenderParams{}, 2);
  const RawRender eight = render(room, pose, intr, RenderParams{}, 8);
  CHECK(one.rgb == two.rgb);
  CHECK(one.depth == two.depth);
  CHECK(one.valid_mask == two.valid_mask);
  CHECK(one.point_index == two.point_index);
  CHECK(one.rgb == eight.rgb);
  CHECK(one.depth == eight.depth);
  CHECK(one.point_index == eight.point_index);
  CHECK(one.missing_fraction == eight.missing_fraction);
}

TEST_CASE("frustum filtering does not change the rendered image") {
  const PointCloud room = tbpos::test::make_room_cloud(50000, 9);
  const auto intr = intrinsics_from_fov(60.0, 320, 240);
  const Posed pose = pose_from_euler<double>({0.5, 0.1, 1.2}, {120.0, -10.0, 0.0});
  RenderParams params;
  const RawRender full = render(room, pose, intr, params);
  const auto [subset, indices] = filter_frustum(room, pose, intr, params);
  REQUIRE(subset.size() > 0);
  const RawRender filtered = render(subset, pose, intr, params, 0, &indices);
  CHECK(full.rgb == filtered.rgb);
  CHECK(full.depth == filtered.depth);
  CHECK(full.valid_mask == filtered.valid_mask);
  CHECK(full.point_index == filtered.point_index);
  CHECK(subset.size() < room.size());
}

TEST_CASE("quality gate is inclusive at the boundary") {
  RawRender raw;
  raw.missing_fraction = 0.05;
  CHECK(quality_gate(raw, 0.10));
  raw.missing_fraction = 0.10;
  CHECK(quality_gate(raw, 0.10));
  raw.missing_fraction = 0.30;
  CHECK_FALSE(quality_gate(raw, 0.10));
  CHECK_THROWS_AS(quality_gate(raw, -0.1), std::invalid_argument);
}

TEST_CASE("fill_holes: constant neighborhood fills in one iteration") {
  RawRender raw = manual_raw(3, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      if (x == 1 && y == 1) {
        continue;
      }
      set_pixel(raw, x, y, 100, 2.0f);
    }
  }
  finish_missing_fraction(raw);
  RenderParams params;
  params.max_fill_iterations = 1;
  const RgbdImage filled = fill_holes(raw, params);
  CHECK(filled.rgb.at(1, 1, 0) == 100);
  CHECK(filled.rgb.at(1, 1, 2) == 100);
  CHECK(filled.depth.at(1, 1) == 2.0f);
  CHECK(filled.valid_mask.at(1, 1) == 1);
}

TEST_CASE("fill_holes: mean of mixed neighbors stays within their range") {
  RawRender raw = manual_raw(3, 3);
  // Alternating 0 and 200 on the 8-neighborhood: corners 0, edges 200.
  set_pixel(raw, 0, 0, 0, 1.0f);
  set_pixel(raw, 2, 0, 0, 1.0f);
  set_pixel(raw, 0, 2, 0, 1.0f);
  set_pixel(raw, 2, 2, 0, 1.0f);
  set_pixel(raw, 1, 0, 200, 3.0f);
  set_pixel(raw, 0, 1, 200, 3.0f);
  set_pixel(raw, 2, 1, 200, 3.0f);
  set_pixel(raw, 1, 2, 200, 3.0f);
  finish_missing_fraction(raw);
  const RgbdImage filled = fill_holes(raw, RenderParams{});
  // Mean of 4x0 and 4x200 is 100; clamped range is [0, 200].
  CHECK(filled.rgb.at(1, 1, 0) == 100);
  CHECK(filled.depth.at(1, 1) == 2.0f);
}

TEST_CASE("fill_holes propagates one ring per iteration") {
  RawRender raw = manual_raw(11, 11);
  set_pixel(raw, 5, 5, 50, 4.0f);
  finish_missing_fraction(raw);
  RenderParams params;
  params.max_fill_iterations = 2;
  const RgbdImage filled = fill_holes(raw, params);
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      const int cheb = std::max(std::abs(x - 5), std::abs(y - 5));
      if (cheb <= 2) {
        CHECK(filled.valid_mask.at(x, y) == 1);
        CHECK(filled.rgb.at(x, y, 0) == 50);
        CHECK(filled.depth.at(x, y) == 4.0f);
      } else {
        CHECK(filled.valid_mask.at(x, y) == 0);
        CHECK(filled.depth.at(x, y) == 0.0f);
        CHECK(filled.rgb.at(x, y, 0) == 0);
      }
    }
  }
}

TEST_CASE("fill_holes never touches originally valid pixels") {
  const PointCloud room = tbpos::test::make_room_cloud(20000, 17);
  const auto intr = intrinsics_from_fov(60.0, 160, 120);
  const Posed pose = pose_from_euler<double>({0, 0, 1.5}, {75.0, 0.0, 0.0});
  const RawRender raw = render(room, pose, intr);
  REQUIRE(raw.missing_fraction < 1.0);
  const RgbdImage filled = fill_holes(raw, RenderParams{});
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 160; ++x) {
      if (!raw.valid_mask.at(x, y)) {
        continue;
      }
      REQUIRE(filled.valid_mask.at(x, y) == 1);
      REQUIRE(filled.depth.at(x, y) == raw.depth.at(x, y));
      REQUIRE(filled.rgb.at(x, y, 0) == raw.rgb.at(x, y, 0));
      REQUIRE(filled.rgb.at(x, y, 1) == raw.rgb.at(x, y, 1));
      REQUIRE(filled.rgb.at(x, y, 2) == raw.rgb.at(x, y, 2));
    }
  }
}

TEST_CASE("fill_holes matches a plain synchronous reference sweep") {
  // Independent oracle: full-image synchronous iteration without the
  // frontier bookkeeping, including the per-pixel clamping property.
  const PointCloud room = tbpos::test::make_room_cloud(4000, 23);
  const auto intr = intrinsics_from_fov(60.0, 96, 72);
  const Posed pose = pose_from_euler<double>({0.2, 0.1, 1.4}, {210.0, -8.0, 0.0});
  const RawRender raw = render(room, pose, intr);
  REQUIRE(raw.missing_fraction < 1.0);
  REQUIRE(raw.missing_fraction > 0.0);

  RenderParams params;
  params.max_fill_iterations = 25;
  const RgbdImage filled = fill_holes(raw, params);

  RgbRaster rgb = raw.rgb;
  DepthRaster depth = raw.depth;
  MaskRaster mask = raw.valid_mask;
  for (int iter = 0; iter < params.max_fill_iterations; ++iter) {
    RgbRaster next_rgb = rgb;
    DepthRaster next_depth = depth;
    MaskRaster next_mask = mask;
    bool any = false;
    for (int y = 0; y < 72; ++y) {
      for (int x = 0; x < 96; ++x) {
        if (mask.at(x, y)) {
          continue;
        }
        double sum[4] = {0, 0, 0, 0};
        double lo[4] = {0, 0, 0, 0};
        double hi[4] = {0, 0, 0, 0};
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) {
              continue;
            }
            const int nx = x + dx;
            const int ny = y + dy;
            if (!mask.contains(nx, ny) || !mask.at(nx, ny)) {
              continue;
            }
            const double v[4] = {static_cast<double>(rgb.at(nx, ny, 0)),
                                 static_cast<double>(rgb.at(nx, ny, 1)),
                                 static_cast<double>(rgb.at(nx, ny, 2)),
                                 static_cast<double>(depth.at(nx, ny))};
            for (int c = 0; c < 4; ++c) {
              if (count == 0) {
                lo[c] = hi[c] = v[c];
              } else {
                lo[c] = std::min(lo[c], v[c]);
                hi[c] = std::max(hi[c], v[c]);
              }
              sum[c] += v[c];
            }
            ++count;
          }
        }
        if (count == 0) {
          continue;
        }
        any = true;
        for (int c = 0; c < 3; ++c) {
          const double mean = sum[c] / count;
          const double clamped = std::clamp(mean, lo[c], hi[c]);
          CHECK(clamped >= lo[c]);
          CHECK(clamped <= hi[c]);
          next_rgb.at(x, y, c) = static_cast<std::uint8_t>(std::lround(clamped));
        }
        next_depth.at(x, y) =
            static_cast<float>(std::clamp(sum[3] / count, lo[3], hi[3]));
        next_mask.at(x, y) = 1;
      }
    }
    rgb = next_rgb;
    depth = next_depth;
    mask = next_mask;
    if (!any) {
      break;
    }
  }
  // Survivors black out, exactly as the library does.
  for (std::size_t px = 0; px < mask.pixel_count(); ++px) {
    if (!mask.data()[px]) {
      depth.data()[px] = 0.0f;
      rgb.data()[px * 3 + 0] = 0;
      rgb.data()[px * 3 + 1] = 0;
      rgb.data()[px * 3 + 2] = 0;
    }
  }
  CHECK(filled.rgb == rgb);
  CHECK(filled.depth == depth);
  CHECK(filled.valid_mask == mask);
}

TEST_CASE("fill_holes rejects a fully empty render") {
  RawRender raw = manual_raw(4, 4);
  finish_missing_fraction(raw);
  CHECK_THROWS_AS(fill_holes(raw, RenderParams{}), std::invalid_argument);
}

TEST_CASE("unproject inverts the projection") {
  const auto intr = intrinsics_from_fov(60.0, 1024, 768);
  RgbdImage image;
  image.rgb = RgbRaster(1024, 768, 3, 0);
  image.depth = DepthRaster(1024, 768, 1, 0.0f);
  image.valid_mask = MaskRaster(1024, 768, 1, 0);
  image.intrinsics = intr;
  image.pose = Posed{};  // identity: camera at origin looking along world +Z
  image.depth.at(512, 384) = 5.0f;
  image.valid_mask.at(512, 384) = 1;

  const Eigen::Vector3d world = unproject(image, 512, 384);
  CHECK((world - Eigen::Vector3d(0, 0, 5)).norm() <= 1e-9);
  CHECK_THROWS_AS(unproject(image, 10, 10), std::invalid_argument);
  CHECK_THROWS_AS(unproject(image, -1, 0), std::invalid_argument);
}

TEST_CASE("render then unproject recovers the original point") {
  const auto intr = intrinsics_from_fov(60.0, 1024, 768);
  const Eigen::Vector3d original(0.84, -0.35, 6.2);
  const PointCloud cloud = single_point(original, 9, 9, 9);
  const Posed pose = pose_from_euler<double>({0.1, 0.2, 0.3}, {4.0, -3.0, 1.0});
  // Express the target point in world coordinates for this pose.
  const Eigen::Vector3d world = pose.to_world(original);
  PointCloud world_cloud = cloud;
  world_cloud.positions.col(0) = world;

  const RawRender raw = render(world_cloud, pose, intr, no_splat());
  int u = -1, v = -1;
  for (int y = 0; y < 768 && u < 0; ++y) {
    for (int x = 0; x < 1024; ++x) {
      if (raw.valid_mask.at(x, y)) {
        u = x;
        v = y;
        break;
      }
    }
  }
  REQUIRE(u >= 0);
  const RgbdImage image = fill_holes(raw, RenderParams{});
  const Eigen::Vector3d recovered = unproject(image, u, v);
  CHECK((recovered - world).norm() <= 0.01);  // splat + pixel rounding slack

  const Eigen::Vector2d uv = intr.project(pose.to_camera(recovered));
  CHECK(std::abs(uv.x() - u) <= 0.5);
  CHECK(std::abs(uv.y() - v) <= 0.5);
}
