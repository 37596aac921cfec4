#include "tbpos/registry.hpp"

#include "tbpos/errors.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace tbpos {

ScanRegistry load_scan_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_scan_registry: cannot open " + path.string());
  }
  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");
  ScanRegistry registry;
  std::unordered_set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto fail = [&](const std::string& what) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                       : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      fail("expected scan_id<TAB>cloud_path<TAB>pose");
    }
    ScanEntry entry;
    entry.scan_id = line.substr(0, tab1);
    const std::string raw_path = line.substr(tab1 + 1, tab2 - tab1 - 1);
    if (entry.scan_id.empty() || raw_path.empty()) {
      fail("empty scan_id or cloud_path");
    }
    if (!seen.insert(entry.scan_id).second) {
      fail("duplicate scan_id '" + entry.scan_id + "'");
    }

    std::istringstream nums(line.substr(tab2 + 1));
    double v[12];
    for (int i = 0; i < 12; ++i) {
      if (!(nums >> v[i])) {
        fail("expected 12 pose numbers, got " + std::to_string(i));
      }
    }
    std::string trailing;
    if (nums >> trailing) {
      fail("trailing data after the 12 pose numbers");
    }
    entry.scanner_pose.rotation << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    entry.scanner_pose.translation << v[9], v[10], v[11];
    if (!is_rotation(entry.scanner_pose.rotation, 1e-6)) {
      fail("scanner rotation for '" + entry.scan_id + "' is not orthonormal within 1e-6");
    }
    if (orthonormality_error(entry.scanner_pose.rotation) > 1e-12) {
      entry.scanner_pose.rotation = orthonormalize(entry.scanner_pose.rotation);
    }

    std::filesystem::path cloud_path(raw_path);
    if (cloud_path.is_relative()) {
      cloud_path = base / cloud_path;
    }
    if (!std::filesystem::exists(cloud_path)) {
      fail("cloud file not found: " + cloud_path.string());
    }
    entry.cloud_path = std::move(cloud_path);
    registry.entries.push_back(std::move(entry));
  }
  return registry;
}

}  // namespace tbpos
