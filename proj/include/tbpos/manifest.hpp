#pragma once

#include "tbpos/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tbpos {

/// Ground-truth record of one synthesized query: the exact pose it was
/// rendered at plus every distortion parameter needed to reproduce it.
struct QueryRecord {
  std::string query_id;
  std::string scan_id;
  Posed gt_pose;
  std::uint64_t seed = 0;          // per-query sub-seed
  double missing_fraction = 0.0;   // before hole filling

  bool flashlight = false;
  double flashlight_gain = 0.0;
  double flashlight_half_distance = 0.0;  // meters

  bool occlusion = false;
  double occlusion_fraction = 0.0;  // realized area share, in [0.01, 0.50]
  std::array<double, 8> occlusion_polygon{};  // 4 vertices, pixel units
  std::array<std::uint8_t, 3> occlusion_rgb{};

  double noise_sigma = 0.0;  // gray levels; 0 = off
};

struct QueryManifest {
  std::vector<QueryRecord> records;

  const QueryRecord* find(const std::string& query_id) const {
    for (const auto& r : records) {
      if (r.query_id == query_id) {
        return &r;
      }
    }
    return nullptr;
  }
};

/// Writes the `TBPOS-MANIFEST v1` format: a header line, then one
/// whitespace-separated key=value record per query (`#` lines are comments).
void write_manifest(const QueryManifest& manifest, const std::filesystem::path& path);

/// Parses and validates a manifest: header, unique query ids, orthonormal
/// poses (within 1e-6, re-orthonormalized), occlusion fractions inside
/// [0.01, 0.50] when occlusion is on. Unknown keys are rejected.
QueryManifest read_manifest(const std::filesystem::path& path);

}  // namespace tbpos
