#include "tbpos/manifest.hpp"

#include "tbpos/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace tbpos {

namespace {

constexpr const char* kHeader = "TBPOS-MANIFEST v1";

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string pose_to_value(const Posed& pose) {
  // Row-major [R | t], matching the estimates file ordering.
  std::ostringstream ss;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      ss << format_full(pose.rotation(r, c)) << ',';
    }
    ss << format_full(pose.translation(r));
    if (r < 2) {
      ss << ',';
    }
  }
  return ss.str();
}

std::vector<double> parse_csv_doubles(const std::string& value, std::size_t expected,
                                      const std::string& context) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t comma = value.find(',', pos);
    if (comma == std::string::npos) {
      comma = value.size();
    }
    const std::string tok = value.substr(pos, comma - pos);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw ParseError(context + ": bad number '" + tok + "'");
    }
    out.push_back(v);
    pos = comma + 1;
    if (comma == value.size()) {
      break;
    }
  }
  if (out.size() != expected) {
    throw ParseError(context + ": expected " + std::to_string(expected) +
                     " comma-separated numbers, got " + std::to_string(out.size()));
  }
  return out;
}

}  // namespace

void write_manifest(const QueryManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("write_manifest: cannot open " + path.string());
  }
  out << kHeader << '\n';
  for (const auto& r : manifest.records) {
    out << "query_id=" << r.query_id << " scan_id=" << r.scan_id << " seed=" << r.seed
        << " missing_frac=" << format_full(r.missing_fraction)
        << " pose=" << pose_to_value(r.gt_pose);
    out << " flashlight=" << (r.flashlight ? "on" : "off");
    if (r.flashlight) {
      out << " fl_gain=" << format_full(r.flashlight_gain)
          << " fl_half_dist_m=" << format_full(r.flashlight_half_distance);
    }
    out << " occlusion=" << (r.occlusion ? "on" : "off");
    if (r.occlusion) {
      out << " occ_frac=" << format_full(r.occlusion_fraction) << " occ_poly=";
      for (int i = 0; i < 8; ++i) {
        out << format_full(r.occlusion_polygon[static_cast<std::size_t>(i)])
            << (i < 7 ? "," : "");
      }
      out << " occ_rgb=" << static_cast<int>(r.occlusion_rgb[0]) << ','
          << static_cast<int>(r.occlusion_rgb[1]) << ','
          << static_cast<int>(r.occlusion_rgb[2]);
    }
    out << " noise_sigma=" << format_full(r.noise_sigma) << '\n';
  }
  if (!out) {
    throw IoError("write_manifest: write failed for " + path.string());
  }
}

QueryManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_manifest: cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path.string() + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != kHeader) {
    throw ParseError(path.string() + ": expected header '" + std::string(kHeader) + "'");
  }

  QueryManifest manifest;
  std::unordered_set<std::string> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const std::string context = path.string() + ":" + std::to_string(line_no);
    const auto fail = [&](const std::string& what) {
      throw ParseError(context + ": " + what);
    };

    std::map<std::string, std::string> kv;
    std::istringstream ss(line);
    std::string field;
    while (ss >> field) {
      const std::size_t eq = field.find('=');
      if (eq == std::string::npos || eq == 0) {
        fail("expected key=value, got '" + field + "'");
      }
      const std::string key = field.substr(0, eq);
      if (!kv.emplace(key, field.substr(eq + 1)).second) {
        fail("duplicate key '" + key + "'");
      }
    }

    static const std::unordered_set<std::string> kKnownKeys = {
        "query_id", "scan_id", "seed", "missing_frac", "pose",
        "flashlight", "fl_gain", "fl_half_dist_m",
        "occlusion", "occ_frac", "occ_poly", "occ_rgb", "noise_sigma"};
    for (const auto& [key, value] : kv) {
      if (!kKnownKeys.count(key)) {
        fail("unknown key '" + key + "'");
      }
    }
    const auto require = [&](const char* key) -> const std::string& {
      const auto it = kv.find(key);
      if (it == kv.end()) {
        fail(std::string("missing key '") + key + "'");
      }
      return it->second;
    };
    const auto to_double = [&](const std::string& value, const char* key) {
      double v = 0.0;
      const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        fail(std::string("bad number for '") + key + "': '" + value + "'");
      }
      return v;
    };
    const auto to_on_off = [&](const std::string& value, const char* key) {
      if (value == "on") return true;
      if (value == "off") return false;
      fail(std::string("'") + key + "' must be on or off");
      return false;
    };

    QueryRecord rec;
    rec.query_id = require("query_id");
    rec.scan_id = require("scan_id");
    if (!seen.insert(rec.query_id).second) {
      fail("duplicate query_id '" + rec.query_id + "'");
    }
    {
      const std::string& value = require("seed");
      const auto res = std::from_chars(value.data(), value.data() + value.size(), rec.seed);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        fail("bad seed '" + value + "'");
      }
    }
    rec.missing_fraction = to_double(require("missing_frac"), "missing_frac");

    const std::vector<double> pv = parse_csv_doubles(require("pose"), 12, context + ": pose");
    rec.gt_pose.rotation << pv[0], pv[1], pv[2], pv[4], pv[5], pv[6], pv[8], pv[9], pv[10];
    rec.gt_pose.translation << pv[3], pv[7], pv[11];
    if (!is_rotation(rec.gt_pose.rotation, 1e-6)) {
      fail("pose rotation is not orthonormal within 1e-6");
    }
    if (orthonormality_error(rec.gt_pose.rotation) > 1e-12) {
      rec.gt_pose.rotation = orthonormalize(rec.gt_pose.rotation);
    }

    rec.flashlight = to_on_off(require("flashlight"), "flashlight");
    if (rec.flashlight) {
      rec.flashlight_gain = to_double(require("fl_gain"), "fl_gain");
      rec.flashlight_half_distance = to_double(require("fl_half_dist_m"), "fl_half_dist_m");
      if (!(rec.flashlight_gain > 0.0) || !(rec.flashlight_half_distance > 0.0)) {
        fail("flashlight parameters must be positive");
      }
    }

    rec.occlusion = to_on_off(require("occlusion"), "occlusion");
    if (rec.occlusion) {
      rec.occlusion_fraction = to_double(require("occ_frac"), "occ_frac");
      if (rec.occlusion_fraction < 0.01 || rec.occlusion_fraction > 0.50) {
        fail("occ_frac outside [0.01, 0.50]");
      }
      const std::vector<double> poly =
          parse_csv_doubles(require("occ_poly"), 8, context + ": occ_poly");
      for (int i = 0; i < 8; ++i) {
        rec.occlusion_polygon[static_cast<std::size_t>(i)] = poly[static_cast<std::size_t>(i)];
      }
      const std::vector<double> rgb =
          parse_csv_doubles(require("occ_rgb"), 3, context + ": occ_rgb");
      for (int i = 0; i < 3; ++i) {
        if (rgb[static_cast<std::size_t>(i)] < 0 || rgb[static_cast<std::size_t>(i)] > 255) {
          fail("occ_rgb channel outside [0, 255]");
        }
        rec.occlusion_rgb[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(rgb[static_cast<std::size_t>(i)]);
      }
    }

    rec.noise_sigma = to_double(require("noise_sigma"), "noise_sigma");
    if (rec.noise_sigma < 0.0) {
      fail("noise_sigma must be non-negative");
    }
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

}  // namespace tbpos
