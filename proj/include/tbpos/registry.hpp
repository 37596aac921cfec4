#pragma once

#include "tbpos/geometry.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tbpos {

/// One registered scan: the world pose of the scanner (camera-from-world) and
/// where its cloud lives.
struct ScanEntry {
  std::string scan_id;
  std::filesystem::path cloud_path;  // resolved against the registry location
  Posed scanner_pose;
};

struct ScanRegistry {
  std::vector<ScanEntry> entries;

  const ScanEntry* find(const std::string& scan_id) const {
    for (const auto& e : entries) {
      if (e.scan_id == scan_id) {
        return &e;
      }
    }
    return nullptr;
  }
};

/// Loads a scan registry: one line per scan,
///   scan_id<TAB>cloud_path<TAB>r11 r12 r13 r21 r22 r23 r31 r32 r33 tx ty tz
/// with `#` comment lines. Relative cloud paths resolve against the registry
/// file's directory. Rotations must be orthonormal within 1e-6 and are
/// re-orthonormalized; duplicate scan ids and unresolvable cloud paths are
/// errors.
ScanRegistry load_scan_registry(const std::filesystem::path& path);

}  // namespace tbpos
