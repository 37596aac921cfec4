#include "tbpos/config.hpp"

#include "tbpos/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace tbpos {

namespace {

double parse_double(const std::string& value, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ParseError(context + ": bad number '" + value + "'");
  }
  return v;
}

int parse_int(const std::string& value, const std::string& context) {
  int v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ParseError(context + ": bad integer '" + value + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& value, const std::string& context) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ParseError(context + ": bad unsigned integer '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& value, const std::string& context) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ParseError(context + ": bad boolean '" + value + "' (use true/false)");
}

std::vector<double> parse_double_list(const std::string& value, const std::string& context) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t comma = value.find(',', pos);
    if (comma == std::string::npos) {
      comma = value.size();
    }
    out.push_back(parse_double(value.substr(pos, comma - pos), context));
    pos = comma + 1;
    if (comma == value.size()) {
      break;
    }
  }
  if (out.empty()) {
    throw ParseError(context + ": empty list");
  }
  return out;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_list(const std::vector<double>& values) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ss << (i ? "," : "") << format_value(values[i]);
  }
  return ss.str();
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value, const std::string& context) {
  // Render parameters apply to both the slicing and synthesis stages.
  const auto set_render = [&](const std::function<void(RenderParams&)>& assign) {
    assign(config.slice.render);
    assign(config.synth.render);
  };

  if (key == "slice.yaw_count") {
    config.slice.yaw_count = parse_int(value, context);
  } else if (key == "slice.yaw_stride_deg") {
    config.slice.yaw_stride_deg = parse_double(value, context);
  } else if (key == "slice.pitch_ring_deg") {
    config.slice.pitch_ring_deg = parse_double_list(value, context);
  } else if (key == "slice.hfov_deg") {
    config.slice.hfov_deg = parse_double(value, context);
  } else if (key == "slice.width") {
    config.slice.width = parse_int(value, context);
  } else if (key == "slice.height") {
    config.slice.height = parse_int(value, context);
  } else if (key == "render.z_near_m") {
    set_render([&](RenderParams& r) { r.z_near = parse_double(value, context); });
  } else if (key == "render.splat_radius_px") {
    set_render([&](RenderParams& r) { r.splat_radius = parse_int(value, context); });
  } else if (key == "render.depth_tie_eps_m") {
    set_render([&](RenderParams& r) { r.depth_tie_epsilon = parse_double(value, context); });
  } else if (key == "render.max_fill_iterations") {
    set_render([&](RenderParams& r) { r.max_fill_iterations = parse_int(value, context); });
  } else if (key == "query.hfov_deg") {
    config.synth.hfov_deg = parse_double(value, context);
  } else if (key == "query.width") {
    config.synth.width = parse_int(value, context);
  } else if (key == "query.height") {
    config.synth.height = parse_int(value, context);
  } else if (key == "sample.max_horizontal_offset_m") {
    config.synth.limits.max_horizontal_offset = parse_double(value, context);
  } else if (key == "sample.max_vertical_offset_m") {
    config.synth.limits.max_vertical_offset = parse_double(value, context);
  } else if (key == "sample.yaw_min_deg") {
    config.synth.limits.yaw_min_deg = parse_double(value, context);
  } else if (key == "sample.yaw_max_deg") {
    config.synth.limits.yaw_max_deg = parse_double(value, context);
  } else if (key == "sample.pitch_limit_deg") {
    config.synth.limits.pitch_limit_deg = parse_double(value, context);
  } else if (key == "sample.roll_limit_deg") {
    config.synth.limits.roll_limit_deg = parse_double(value, context);
  } else if (key == "sample.max_missing") {
    config.synth.limits.max_missing = parse_double(value, context);
  } else if (key == "sample.max_attempts") {
    config.synth.limits.max_attempts = parse_int(value, context);
  } else if (key == "flashlight.enabled") {
    config.synth.flashlight.enabled = parse_bool(value, context);
  } else if (key == "flashlight.gain") {
    config.synth.flashlight.gain = parse_double(value, context);
  } else if (key == "flashlight.half_distance_m") {
    config.synth.flashlight.half_distance = parse_double(value, context);
  } else if (key == "occlusion.probability") {
    config.synth.occlusion_probability = parse_double(value, context);
  } else if (key == "noise.sigma") {
    config.synth.noise_sigma = parse_double(value, context);
  } else if (key == "eval.translation_thresholds_m") {
    config.eval.translation_m = parse_double_list(value, context);
  } else if (key == "eval.rotation_threshold_deg") {
    config.eval.rotation_deg = parse_double(value, context);
  } else if (key == "workers") {
    config.workers = parse_int(value, context);
  } else if (key == "master_seed") {
    config.master_seed = parse_u64(value, context);
  } else {
    throw ParseError(context + ": unknown config key '" + key + "'");
  }
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_config_file: cannot open " + path.string());
  }
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    std::string trimmed = line;
    const auto first = trimmed.find_first_not_of(" \t");
    if (first == std::string::npos) {
      continue;
    }
    trimmed = trimmed.substr(first);
    if (trimmed[0] == '#') {
      continue;
    }
    const std::string context = path.string() + ":" + std::to_string(line_no);
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ParseError(context + ": expected key = value");
    }
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(trimmed.substr(0, eq));
    const std::string value = strip(trimmed.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError(context + ": empty key or value");
    }
    apply_config_entry(config, key, value, context);
  }
  return config;
}

std::string render_config(const RunConfig& c) {
  std::ostringstream out;
  out << "slice.yaw_count = " << c.slice.yaw_count << '\n';
  out << "slice.yaw_stride_deg = " << format_value(c.slice.yaw_stride_deg) << '\n';
  out << "slice.pitch_ring_deg = " << format_list(c.slice.pitch_ring_deg) << '\n';
  out << "slice.hfov_deg = " << format_value(c.slice.hfov_deg) << '\n';
  out << "slice.width = " << c.slice.width << '\n';
  out << "slice.height = " << c.slice.height << '\n';
  out << "render.z_near_m = " << format_value(c.slice.render.z_near) << '\n';
  out << "render.splat_radius_px = " << c.slice.render.splat_radius << '\n';
  out << "render.depth_tie_eps_m = " << format_value(c.slice.render.depth_tie_epsilon) << '\n';
  out << "render.max_fill_iterations = " << c.slice.render.max_fill_iterations << '\n';
  out << "query.hfov_deg = " << format_value(c.synth.hfov_deg) << '\n';
  out << "query.width = " << c.synth.width << '\n';
  out << "query.height = " << c.synth.height << '\n';
  out << "sample.max_horizontal_offset_m = "
      << format_value(c.synth.limits.max_horizontal_offset) << '\n';
  out << "sample.max_vertical_offset_m = "
      << format_value(c.synth.limits.max_vertical_offset) << '\n';
  out << "sample.yaw_min_deg = " << format_value(c.synth.limits.yaw_min_deg) << '\n';
  out << "sample.yaw_max_deg = " << format_value(c.synth.limits.yaw_max_deg) << '\n';
  out << "sample.pitch_limit_deg = " << format_value(c.synth.limits.pitch_limit_deg) << '\n';
  out << "sample.roll_limit_deg = " << format_value(c.synth.limits.roll_limit_deg) << '\n';
  out << "sample.max_missing = " << format_value(c.synth.limits.max_missing) << '\n';
  out << "sample.max_attempts = " << c.synth.limits.max_attempts << '\n';
  out << "flashlight.enabled = " << (c.synth.flashlight.enabled ? "true" : "false") << '\n';
  out << "flashlight.gain = " << format_value(c.synth.flashlight.gain) << '\n';
  out << "flashlight.half_distance_m = " << format_value(c.synth.flashlight.half_distance)
      << '\n';
  out << "occlusion.probability = " << format_value(c.synth.occlusion_probability) << '\n';
  out << "noise.sigma = " << format_value(c.synth.noise_sigma) << '\n';
  out << "eval.translation_thresholds_m = " << format_list(c.eval.translation_m) << '\n';
  out << "eval.rotation_threshold_deg = " << format_value(c.eval.rotation_deg) << '\n';
  // The worker count is deliberately not echoed: outputs are contractually
  // identical for any value, so it is not part of a dataset's provenance.
  out << "master_seed = " << c.master_seed << '\n';
  return out.str();
}

}  // namespace tbpos
