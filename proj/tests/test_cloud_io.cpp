#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tbpos/errors.hpp"
#include "tbpos/estimates.hpp"
#include "tbpos/image_id.hpp"
#include "tbpos/manifest.hpp"
#include "tbpos/ply_io.hpp"
#include "tbpos/png_io.hpp"
#include "tbpos/registry.hpp"
#include "tbpos/rgbd_io.hpp"
#include "test_util.hpp"

#include <fstream>
#include <functional>
#include <sstream>

using namespace tbpos;
using tbpos::test::TempDir;

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PointCloud random_cloud(int n, std::uint64_t seed) {
  PointCloud cloud;
  cloud.resize(n);
  Rng rng(seed);
  // Coordinates on a 1/16 grid are exactly representable in float32, making
  // the save/load comparison exact.
  const auto grid = [&]() { return std::round(rng.uniform(-50, 50) * 16.0) / 16.0; };
  for (int i = 0; i < n; ++i) {
    cloud.positions.col(i) = Eigen::Vector3d(grid(), grid(), grid());
    cloud.colors(0, i) = static_cast<std::uint8_t>(rng.next_below(256));
    cloud.colors(1, i) = static_cast<std::uint8_t>(rng.next_below(256));
    cloud.colors(2, i) = static_cast<std::uint8_t>(rng.next_below(256));
  }
  return cloud;
}

RgbdImage random_rgbd(int width, int height, std::uint64_t seed) {
  RgbdImage image;
  Rng rng(seed);
  image.rgb = RgbRaster(width, height, 3);
  image.depth = DepthRaster(width, height, 1);
  image.valid_mask = MaskRaster(width, height, 1);
  for (std::size_t px = 0; px < image.depth.pixel_count(); ++px) {
    const bool valid = rng.next_double() < 0.8;
    image.valid_mask.data()[px] = valid ? 1 : 0;
    image.depth.data()[px] = valid ? static_cast<float>(rng.uniform(0.1, 60.0)) : 0.0f;
    for (int c = 0; c < 3; ++c) {
      image.rgb.data()[px * 3 + c] = static_cast<std::uint8_t>(rng.next_below(256));
    }
  }
  image.intrinsics = intrinsics_from_fov(60.0, width, height);
  image.pose = tbpos::test::random_pose(rng);
  image.image_id = "fixture_000";
  return image;
}

}  // namespace

TEST_CASE("ascii PLY with known coordinates loads bit-exact") {
  TempDir dir("ply-ascii");
  const auto path = dir.path() / "three.ply";
  write_file(path,
             "ply\n"
             "format ascii 1.0\n"
             "comment hand-written fixture\n"
             "element vertex 3\n"
             "property float x\n"
             "property float y\n"
             "property float z\n"
             "property uchar red\n"
             "property uchar green\n"
             "property uchar blue\n"
             "end_header\n"
             "1.5 -2.25 3.125 255 0 16\n"
             "0 0 0 1 2 3\n"
             "-10.5 4.75 -0.0625 128 129 130\n");
  const PointCloud cloud = load_ply(path);
  REQUIRE(cloud.size() == 3);
  CHECK(cloud.positions(0, 0) == 1.5);
  CHECK(cloud.positions(1, 0) == -2.25);
  CHECK(cloud.positions(2, 0) == 3.125);
  CHECK(cloud.colors(0, 0) == 255);
  CHECK(cloud.colors(2, 0) == 16);
  CHECK(cloud.positions(0, 2) == -10.5);
  CHECK(cloud.colors(1, 2) == 129);
}

TEST_CASE("binary PLY round trip is exact") {
  TempDir dir("ply-bin");
  const auto path = dir.path() / "cloud.ply";
  const PointCloud original = random_cloud(1000, 99);
  save_ply(original, path);
  const PointCloud loaded = load_ply(path);
  REQUIRE(loaded.size() == original.size());
  CHECK((loaded.positions - original.positions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.colors.cast<int>() - original.colors.cast<int>()).cwiseAbs().maxCoeff() == 0);

  // And again: a rewritten file reproduces the same bytes.
  const auto path2 = dir.path() / "cloud2.ply";
  save_ply(loaded, path2);
  CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("large cloud round trip") {
  TempDir dir("ply-large");
  const auto path = dir.path() / "large.ply";
  const PointCloud original = random_cloud(1000000, 7);
  save_ply(original, path);
  const PointCloud loaded = load_ply(path);
  REQUIRE(loaded.size() == original.size());
  CHECK((loaded.positions - original.positions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.colors.cast<int>() - original.colors.cast<int>()).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("single point cloud round trips and empty clouds are rejected") {
  TempDir dir("ply-edge");
  const PointCloud one = random_cloud(1, 3);
  save_ply(one, dir.path() / "one.ply");
  CHECK(load_ply(dir.path() / "one.ply").size() == 1);

  PointCloud empty;
  CHECK_THROWS_AS(save_ply(empty, dir.path() / "empty.ply"), std::invalid_argument);
}

TEST_CASE("truncated PLY body names the failure point") {
  TempDir dir("ply-trunc");
  const auto path = dir.path() / "trunc.ply";
  write_file(path,
             "ply\nformat ascii 1.0\nelement vertex 10\n"
             "property float x\nproperty float y\nproperty float z\n"
             "property uchar red\nproperty uchar green\nproperty uchar blue\n"
             "end_header\n"
             "0 0 0 1 1 1\n0 0 1 1 1 1\n0 1 0 1 1 1\n0 1 1 1 1 1\n1 0 0 1 1 1\n"
             "1 0 1 1 1 1\n1 1 0 1 1 1\n1 1 1 1 1 1\n2 0 0 1 1 1\n");
  CHECK_THROWS_WITH_AS(load_ply(path), doctest::Contains("vertex 9"), ParseError);

  // Binary truncation: chop the last bytes off a valid file.
  const auto bin = dir.path() / "bin.ply";
  save_ply(random_cloud(10, 5), bin);
  std::string bytes = read_file(bin);
  bytes.resize(bytes.size() - 7);
  write_file(bin, bytes);
  CHECK_THROWS_AS(load_ply(bin), ParseError);
}

TEST_CASE("PLY header validation") {
  TempDir dir("ply-hdr");
  const auto path = dir.path() / "bad.ply";

  write_file(path, "ply\nformat ascii 1.0\nelement vertex 1\n"
                   "property float x\nproperty float y\nproperty float z\n"
                   "end_header\n0 0 0\n");
  CHECK_THROWS_WITH_AS(load_ply(path), doctest::Contains("red"), ParseError);

  write_file(path, "not_a_ply\n");
  CHECK_THROWS_AS(load_ply(path), ParseError);

  write_file(path, "ply\nformat binary_big_endian 1.0\nelement vertex 1\n"
                   "property float x\nproperty float y\nproperty float z\n"
                   "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                   "end_header\n");
  CHECK_THROWS_AS(load_ply(path), ParseError);

  write_file(path, "ply\nformat ascii 1.0\nelement vertex 1\n"
                   "property int x\nproperty float y\nproperty float z\n"
                   "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                   "end_header\n0 0 0 1 1 1\n");
  CHECK_THROWS_AS(load_ply(path), ParseError);

  // Non-finite coordinate.
  write_file(path, "ply\nformat ascii 1.0\nelement vertex 1\n"
                   "property float x\nproperty float y\nproperty float z\n"
                   "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                   "end_header\nnan 0 0 1 1 1\n");
  CHECK_THROWS_AS(load_ply(path), ParseError);
}

TEST_CASE("ascii PLY skips extra scalar properties") {
  TempDir dir("ply-extra");
  const auto path = dir.path() / "extra.ply";
  write_file(path,
             "ply\nformat ascii 1.0\nelement vertex 1\n"
             "property float x\nproperty float y\nproperty float z\n"
             "property float intensity\n"
             "property uchar red\nproperty uchar green\nproperty uchar blue\n"
             "end_header\n1 2 3 0.5 10 20 30\n");
  const PointCloud cloud = load_ply(path);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.positions(2, 0) == 3.0);
  CHECK(cloud.colors(0, 0) == 10);
}

TEST_CASE("truncation fuzz never crashes the PLY parser") {
  TempDir dir("ply-fuzz");
  const auto path = dir.path() / "base.ply";
  save_ply(random_cloud(64, 11), path);
  const std::string bytes = read_file(path);
  for (std::size_t cut = 0; cut < bytes.size(); cut += 13) {
    const auto mangled = dir.path() / "cut.ply";
    write_file(mangled, bytes.substr(0, cut));
    try {
      (void)load_ply(mangled);
    } catch (const ParseError&) {
    } catch (const IoError&) {
    }
  }
  CHECK(true);  // reaching here means no crash
}

TEST_CASE("truncation fuzz never crashes the text parsers") {
  TempDir dir("text-fuzz");
  save_ply(random_cloud(4, 2), dir.path() / "a.ply");
  const std::string registry_text =
      "scan_a\ta.ply\t1 0 0 0 1 0 0 0 1 0 0 0\n"
      "scan_b\ta.ply\t0 -1 0 1 0 0 0 0 1 1 2 3\n";
  const std::string estimates_text =
      "q0 1 0 0 0.5 0 1 0 -0.25 0 0 1 2\nq1 FAILED\n";
  const std::string manifest_text =
      "TBPOS-MANIFEST v1\n"
      "query_id=q0 scan_id=s seed=7 missing_frac=0.02 pose=1,0,0,0,0,1,0,0,0,0,1,0 "
      "flashlight=on fl_gain=4 fl_half_dist_m=3 occlusion=on occ_frac=0.2 "
      "occ_poly=1,1,50,2,60,70,2,60 occ_rgb=20,30,40 noise_sigma=1\n";

  const auto fuzz = [&](const std::string& text, const std::string& name,
                        const std::function<void(const std::filesystem::path&)>& parse) {
    for (std::size_t cut = 0; cut <= text.size(); cut += 3) {
      const auto path = dir.path() / name;
      write_file(path, text.substr(0, cut));
      try {
        parse(path);
      } catch (const ParseError&) {
      } catch (const IoError&) {
      }
    }
  };
  fuzz(registry_text, "reg.txt",
       [](const std::filesystem::path& p) { (void)load_scan_registry(p); });
  fuzz(estimates_text, "est.txt",
       [](const std::filesystem::path& p) { (void)read_estimates(p); });
  fuzz(manifest_text, "man.txt",
       [](const std::filesystem::path& p) { (void)read_manifest(p); });
  CHECK(true);
}

TEST_CASE("scan registry loads entries in order") {
  TempDir dir("registry");
  save_ply(random_cloud(5, 1), dir.path() / "a.ply");
  save_ply(random_cloud(5, 2), dir.path() / "b.ply");
  write_file(dir.path() / "scans.txt",
             "# fixture registry\n"
             "scan_a\ta.ply\t1 0 0 0 1 0 0 0 1 0 0 0\n"
             "scan_b\tb.ply\t1 0 0 0 1 0 0 0 1 1 2 3\n");
  const ScanRegistry registry = load_scan_registry(dir.path() / "scans.txt");
  REQUIRE(registry.entries.size() == 2);
  CHECK(registry.entries[0].scan_id == "scan_a");
  CHECK(registry.entries[0].scanner_pose.rotation == Eigen::Matrix3d::Identity());
  CHECK(registry.entries[1].scanner_pose.translation == Eigen::Vector3d(1, 2, 3));
  CHECK(registry.find("scan_b") != nullptr);
  CHECK(registry.find("scan_c") == nullptr);
}

TEST_CASE("scan registry validation") {
  TempDir dir("registry-bad");
  save_ply(random_cloud(5, 1), dir.path() / "a.ply");

  write_file(dir.path() / "missing.txt", "scan_a\tnope.ply\t1 0 0 0 1 0 0 0 1 0 0 0\n");
  CHECK_THROWS_WITH_AS(load_scan_registry(dir.path() / "missing.txt"),
                       doctest::Contains("nope.ply"), ParseError);

  // Rotation rows scaled by 1.1 fail orthonormality.
  write_file(dir.path() / "scaled.txt",
             "scan_a\ta.ply\t1.1 0 0 0 1.1 0 0 0 1.1 0 0 0\n");
  CHECK_THROWS_WITH_AS(load_scan_registry(dir.path() / "scaled.txt"),
                       doctest::Contains("orthonormal"), ParseError);

  write_file(dir.path() / "dup.txt",
             "scan_a\ta.ply\t1 0 0 0 1 0 0 0 1 0 0 0\n"
             "scan_a\ta.ply\t1 0 0 0 1 0 0 0 1 0 0 0\n");
  CHECK_THROWS_WITH_AS(load_scan_registry(dir.path() / "dup.txt"),
                       doctest::Contains("duplicate"), ParseError);

  write_file(dir.path() / "short.txt", "scan_a\ta.ply\t1 0 0\n");
  CHECK_THROWS_AS(load_scan_registry(dir.path() / "short.txt"), ParseError);
}

TEST_CASE("pose text round trip is bit-exact") {
  TempDir dir("pose-txt");
  Rng rng(17);
  for (int i = 0; i < 10; ++i) {
    const Posed pose = tbpos::test::random_pose(rng);
    write_pose_text(pose, dir.path() / "pose.txt");
    const Posed back = read_pose_text(dir.path() / "pose.txt");
    CHECK(back.rotation == pose.rotation);
    CHECK(back.translation == pose.translation);
  }
  write_file(dir.path() / "bad.txt", "WFC\n1 0 0 0\n0 1 0 0\n0 0 1 0\n");
  CHECK_THROWS_WITH_AS(read_pose_text(dir.path() / "bad.txt"), doctest::Contains("CFW"),
                       ParseError);
}

TEST_CASE("rgbd depth encoding: millimeters with saturation") {
  TempDir dir("rgbd-depth");
  RgbdImage image = random_rgbd(32, 16, 21);
  for (std::size_t px = 0; px < image.depth.pixel_count(); ++px) {
    image.depth.data()[px] = 2.0f;
    image.valid_mask.data()[px] = 1;
  }
  image.depth.at(0, 0) = 65.535f;
  image.depth.at(1, 0) = 70.0f;  // saturates
  image.depth.at(2, 0) = 0.0f;   // invalid
  image.valid_mask.at(2, 0) = 0;

  const RgbdWriteStats stats = write_rgbd(image, dir.path());
  CHECK(stats.saturated_depths == 1);

  const auto depth_mm = read_png_gray16(dir.path() / "fixture_000.depth.png");
  CHECK(depth_mm.at(0, 0) == 65535);
  CHECK(depth_mm.at(1, 0) == 65535);
  CHECK(depth_mm.at(2, 0) == 0);
  CHECK(depth_mm.at(5, 5) == 2000);
}

TEST_CASE("rgbd write/read round trip") {
  TempDir dir("rgbd-rt");
  const RgbdImage image = random_rgbd(64, 48, 23);
  write_rgbd(image, dir.path());
  const RgbdImage back = read_rgbd(dir.path(), image.image_id, image.intrinsics);
  CHECK(back.rgb == image.rgb);
  CHECK(back.valid_mask == image.valid_mask);
  CHECK(back.pose.rotation == image.pose.rotation);
  CHECK(back.pose.translation == image.pose.translation);
  for (std::size_t px = 0; px < image.depth.pixel_count(); ++px) {
    CHECK(std::abs(back.depth.data()[px] - image.depth.data()[px]) <= 0.0005f);
  }
}

TEST_CASE("read_estimates parses poses and FAILED markers") {
  TempDir dir("estimates");
  const auto path = dir.path() / "est.txt";
  write_file(path,
             "q0 1 0 0 0 0 1 0 0 0 0 1 0\n"
             "q7 FAILED\n");
  const auto estimates = read_estimates(path);
  REQUIRE(estimates.size() == 2);
  CHECK(estimates[0].query_id == "q0");
  REQUIRE(estimates[0].pose.has_value());
  CHECK(estimates[0].pose->rotation == Eigen::Matrix3d::Identity());
  CHECK(estimates[0].pose->translation == Eigen::Vector3d::Zero());
  CHECK(estimates[1].query_id == "q7");
  CHECK_FALSE(estimates[1].pose.has_value());
}

TEST_CASE("read_estimates rejects malformed records") {
  TempDir dir("estimates-bad");
  const auto path = dir.path() / "est.txt";

  write_file(path, "q0 1 0 0 0 0 1 0 0 0 0 1\n");  // 11 numbers
  CHECK_THROWS_WITH_AS(read_estimates(path), doctest::Contains(":1:"), ParseError);

  write_file(path, "q0 FAILED\nq0 FAILED\n");
  CHECK_THROWS_WITH_AS(read_estimates(path), doctest::Contains("duplicate"), ParseError);

  // Rotation further than 1e-3 from orthonormal is rejected...
  write_file(path, "q0 1.1 0 0 0 0 1.1 0 0 0 0 1.1 0\n");
  CHECK_THROWS_WITH_AS(read_estimates(path), doctest::Contains("orthonormal"), ParseError);

  // ...but a mildly noisy one is re-orthonormalized.
  write_file(path, "q0 1.0000004 0 0 0 0 0.9999996 0 0 0 0 1.0000002 0\n");
  const auto estimates = read_estimates(path);
  REQUIRE(estimates.size() == 1);
  CHECK(orthonormality_error(estimates[0].pose->rotation) <= 1e-12);
}

TEST_CASE("read_candidates keeps rank order and validates ids") {
  TempDir dir("candidates");
  const auto path = dir.path() / "cand.txt";
  write_file(path, "q1 scan003_012 scan007_000\nq2 scan001_005\n");
  const auto lists = read_candidates(path);
  REQUIRE(lists.size() == 2);
  CHECK(lists[0].image_ids == std::vector<std::string>{"scan003_012", "scan007_000"});

  write_file(path, "q1 scan003_012\nq1 scan001_001\n");
  CHECK_THROWS_WITH_AS(read_candidates(path), doctest::Contains("duplicate"), ParseError);

  write_file(path, "q1 foo\n");
  CHECK_THROWS_WITH_AS(read_candidates(path), doctest::Contains("foo"), ParseError);
}

TEST_CASE("image id helpers") {
  CHECK(make_image_id("scan003", 12) == "scan003_012");
  CHECK(scan_id_of_image("scan003_012") == std::string("scan003"));
  CHECK(scan_id_of_image("a_b_007") == std::string("a_b"));
  CHECK_FALSE(scan_id_of_image("foo").has_value());
  CHECK_FALSE(scan_id_of_image("_007").has_value());
  CHECK_FALSE(scan_id_of_image("scan003_0a2").has_value());
}

TEST_CASE("manifest round trip") {
  TempDir dir("manifest");
  Rng rng(31);
  QueryManifest manifest;
  for (int i = 0; i < 4; ++i) {
    QueryRecord rec;
    rec.query_id = "q" + std::to_string(i);
    rec.scan_id = "scan00" + std::to_string(i % 2);
    rec.gt_pose = tbpos::test::random_pose(rng);
    rec.seed = derive_seed(42, static_cast<std::uint64_t>(i));
    rec.missing_fraction = 0.01 * i;
    rec.flashlight = (i % 2) == 0;
    if (rec.flashlight) {
      rec.flashlight_gain = 4.0;
      rec.flashlight_half_distance = 3.0;
    }
    rec.occlusion = i >= 2;
    if (rec.occlusion) {
      rec.occlusion_fraction = 0.25;
      rec.occlusion_polygon = {10.5, 20.0, 100.0, 25.0, 90.0, 200.0, 5.0, 180.0};
      rec.occlusion_rgb = {30, 40, 25};
    }
    rec.noise_sigma = i == 3 ? 5.0 : 0.0;
    manifest.records.push_back(rec);
  }
  write_manifest(manifest, dir.path() / "manifest.txt");
  const QueryManifest back = read_manifest(dir.path() / "manifest.txt");
  REQUIRE(back.records.size() == manifest.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    const auto& a = manifest.records[i];
    const auto& b = back.records[i];
    CHECK(b.query_id == a.query_id);
    CHECK(b.scan_id == a.scan_id);
    CHECK(b.gt_pose.rotation == a.gt_pose.rotation);
    CHECK(b.gt_pose.translation == a.gt_pose.translation);
    CHECK(b.seed == a.seed);
    CHECK(b.missing_fraction == a.missing_fraction);
    CHECK(b.flashlight == a.flashlight);
    CHECK(b.occlusion == a.occlusion);
    if (a.occlusion) {
      CHECK(b.occlusion_fraction == a.occlusion_fraction);
      CHECK(b.occlusion_polygon == a.occlusion_polygon);
      CHECK(b.occlusion_rgb == a.occlusion_rgb);
    }
    CHECK(b.noise_sigma == a.noise_sigma);
  }
}

TEST_CASE("manifest validation") {
  TempDir dir("manifest-bad");
  const auto path = dir.path() / "m.txt";
  const std::string pose = "1,0,0,0,0,1,0,0,0,0,1,0";

  write_file(path, "WRONG HEADER\n");
  CHECK_THROWS_WITH_AS(read_manifest(path), doctest::Contains("header"), ParseError);

  write_file(path, "TBPOS-MANIFEST v1\nquery_id=q0 scan_id=s seed=1 missing_frac=0 pose=" +
                       pose + " flashlight=off occlusion=off noise_sigma=0 bogus=1\n");
  CHECK_THROWS_WITH_AS(read_manifest(path), doctest::Contains("bogus"), ParseError);

  // Occlusion fraction outside [0.01, 0.50].
  write_file(path,
             "TBPOS-MANIFEST v1\nquery_id=q0 scan_id=s seed=1 missing_frac=0 pose=" + pose +
                 " flashlight=off occlusion=on occ_frac=0.75 occ_poly=0,0,1,0,1,1,0,1 "
                 "occ_rgb=1,2,3 noise_sigma=0\n");
  CHECK_THROWS_WITH_AS(read_manifest(path), doctest::Contains("occ_frac"), ParseError);

  // Duplicate ids.
  const std::string rec = "query_id=q0 scan_id=s seed=1 missing_frac=0 pose=" + pose +
                          " flashlight=off occlusion=off noise_sigma=0\n";
  write_file(path, "TBPOS-MANIFEST v1\n" + rec + rec);
  CHECK_THROWS_WITH_AS(read_manifest(path), doctest::Contains("duplicate"), ParseError);

  // Comment lines are fine.
  write_file(path, "TBPOS-MANIFEST v1\n# note\n" + rec);
  CHECK(read_manifest(path).records.size() == 1);
}
