#include "tbpos/ply_io.hpp"

#include "tbpos/errors.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tbpos {

// Binary records are read and written by memcpy of native scalars.
static_assert(std::endian::native == std::endian::little,
              "binary_little_endian PLY I/O requires a little-endian host");

namespace {

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<PlyType> parse_type(const std::string& token) {
  if (token == "char" || token == "int8") return PlyType::kInt8;
  if (token == "uchar" || token == "uint8") return PlyType::kUint8;
  if (token == "short" || token == "int16") return PlyType::kInt16;
  if (token == "ushort" || token == "uint16") return PlyType::kUint16;
  if (token == "int" || token == "int32") return PlyType::kInt32;
  if (token == "uint" || token == "uint32") return PlyType::kUint32;
  if (token == "float" || token == "float32") return PlyType::kFloat32;
  if (token == "double" || token == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8:
      return 1;
    case PlyType::kInt16:
    case PlyType::kUint16:
      return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32:
      return 4;
    case PlyType::kFloat64:
      return 8;
  }
  return 0;
}

struct PlyProperty {
  PlyType type = PlyType::kFloat32;
  std::string name;
  std::size_t offset = 0;  // byte offset within a binary vertex record
};

struct PlyHeader {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> properties;
  std::size_t record_size = 0;
  std::size_t body_offset = 0;  // first byte after end_header
};

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw ParseError(path.string() + ": " + what);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    tokens.push_back(tok);
  }
  return tokens;
}

PlyHeader parse_header(std::istream& in, const std::filesystem::path& path) {
  PlyHeader header;
  std::string line;
  int line_no = 0;
  const auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) {
      fail(path, "unexpected end of header at line " + std::to_string(line_no + 1));
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    return line;
  };

  if (next_line() != "ply") {
    fail(path, "missing 'ply' magic on line 1");
  }
  bool have_format = false;
  bool in_vertex_element = false;
  bool vertex_seen = false;
  bool done = false;
  while (!done) {
    const std::vector<std::string> tok = split_ws(next_line());
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") {
      continue;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2) {
        fail(path, "malformed format line " + std::to_string(line_no));
      }
      if (tok[1] == "ascii") {
        header.binary = false;
      } else if (tok[1] == "binary_little_endian") {
        header.binary = true;
      } else {
        fail(path, "unsupported format '" + tok[1] + "' (line " + std::to_string(line_no) + ")");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) {
        fail(path, "malformed element line " + std::to_string(line_no));
      }
      if (tok[1] == "vertex") {
        std::size_t count = 0;
        const auto res = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
        if (res.ec != std::errc() || res.ptr != tok[2].data() + tok[2].size()) {
          fail(path, "bad vertex count on line " + std::to_string(line_no));
        }
        header.vertex_count = count;
        in_vertex_element = true;
        vertex_seen = true;
      } else {
        if (!vertex_seen) {
          fail(path, "element '" + tok[1] + "' precedes the vertex element (unsupported)");
        }
        in_vertex_element = false;  // trailing elements are ignored
      }
    } else if (tok[0] == "property") {
      if (!in_vertex_element) {
        continue;
      }
      if (tok.size() >= 2 && tok[1] == "list") {
        fail(path, "list property on vertex element (unsupported), line " +
                       std::to_string(line_no));
      }
      if (tok.size() != 3) {
        fail(path, "malformed property line " + std::to_string(line_no));
      }
      const auto type = parse_type(tok[1]);
      if (!type) {
        fail(path, "unknown property type '" + tok[1] + "' on line " + std::to_string(line_no));
      }
      PlyProperty prop;
      prop.type = *type;
      prop.name = tok[2];
      prop.offset = header.record_size;
      header.record_size += type_size(*type);
      header.properties.push_back(std::move(prop));
    } else if (tok[0] == "end_header") {
      done = true;
    } else {
      fail(path, "unrecognized header line " + std::to_string(line_no) + ": '" + tok[0] + "'");
    }
  }
  if (!have_format) {
    fail(path, "missing format line");
  }
  if (!vertex_seen) {
    fail(path, "missing vertex element");
  }
  header.body_offset = static_cast<std::size_t>(in.tellg());
  return header;
}

int find_property(const PlyHeader& header, const std::string& name) {
  for (std::size_t i = 0; i < header.properties.size(); ++i) {
    if (header.properties[i].name == name) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

double read_scalar(const unsigned char* record, const PlyProperty& prop) {
  const unsigned char* p = record + prop.offset;
  switch (prop.type) {
    case PlyType::kFloat32: {
      float f;
      std::memcpy(&f, p, 4);
      return f;
    }
    case PlyType::kFloat64: {
      double d;
      std::memcpy(&d, p, 8);
      return d;
    }
    default:
      return 0.0;  // only float coordinate properties are read through here
  }
}

}  // namespace

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("load_ply: cannot open " + path.string());
  }
  const PlyHeader header = parse_header(in, path);

  const int ix = find_property(header, "x");
  const int iy = find_property(header, "y");
  const int iz = find_property(header, "z");
  const int ir = find_property(header, "red");
  const int ig = find_property(header, "green");
  const int ib = find_property(header, "blue");
  for (const auto& [idx, name] : std::initializer_list<std::pair<int, const char*>>{
           {ix, "x"}, {iy, "y"}, {iz, "z"}, {ir, "red"}, {ig, "green"}, {ib, "blue"}}) {
    if (idx < 0) {
      fail(path, std::string("missing vertex property '") + name + "'");
    }
  }
  for (const int idx : {ix, iy, iz}) {
    const PlyType t = header.properties[static_cast<std::size_t>(idx)].type;
    if (t != PlyType::kFloat32 && t != PlyType::kFloat64) {
      fail(path, "coordinate property '" + header.properties[static_cast<std::size_t>(idx)].name +
                     "' must be float32 or float64");
    }
  }
  for (const int idx : {ir, ig, ib}) {
    if (header.properties[static_cast<std::size_t>(idx)].type != PlyType::kUint8) {
      fail(path, "color property '" + header.properties[static_cast<std::size_t>(idx)].name +
                     "' must be uint8");
    }
  }

  PointCloud cloud;
  cloud.scan_id = path.stem().string();
  cloud.resize(static_cast<Eigen::Index>(header.vertex_count));

  const auto check_finite = [&](std::size_t vertex, double x, double y, double z) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      fail(path, "non-finite coordinate at vertex " + std::to_string(vertex));
    }
  };

  if (header.binary) {
    std::vector<unsigned char> record(header.record_size);
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
      in.read(reinterpret_cast<char*>(record.data()),
              static_cast<std::streamsize>(header.record_size));
      if (static_cast<std::size_t>(in.gcount()) != header.record_size) {
        fail(path, "truncated body at byte " +
                       std::to_string(header.body_offset + i * header.record_size +
                                      static_cast<std::size_t>(std::max<std::streamsize>(
                                          in.gcount(), 0))) +
                       " (vertex " + std::to_string(i) + " of " +
                       std::to_string(header.vertex_count) + ")");
      }
      const double x = read_scalar(record.data(), header.properties[static_cast<std::size_t>(ix)]);
      const double y = read_scalar(record.data(), header.properties[static_cast<std::size_t>(iy)]);
      const double z = read_scalar(record.data(), header.properties[static_cast<std::size_t>(iz)]);
      check_finite(i, x, y, z);
      cloud.positions.col(static_cast<Eigen::Index>(i)) = Eigen::Vector3d(x, y, z);
      cloud.colors(0, static_cast<Eigen::Index>(i)) =
          record[header.properties[static_cast<std::size_t>(ir)].offset];
      cloud.colors(1, static_cast<Eigen::Index>(i)) =
          record[header.properties[static_cast<std::size_t>(ig)].offset];
      cloud.colors(2, static_cast<Eigen::Index>(i)) =
          record[header.properties[static_cast<std::size_t>(ib)].offset];
    }
  } else {
    std::string line;
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
      if (!std::getline(in, line)) {
        fail(path, "truncated body (vertex " + std::to_string(i) + " of " +
                       std::to_string(header.vertex_count) + ")");
      }
      const std::vector<std::string> tok = split_ws(line);
      if (tok.size() != header.properties.size()) {
        fail(path, "vertex " + std::to_string(i) + ": expected " +
                       std::to_string(header.properties.size()) + " values, got " +
                       std::to_string(tok.size()));
      }
      const auto parse_double = [&](int idx) {
        const std::string& s = tok[static_cast<std::size_t>(idx)];
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
          fail(path, "vertex " + std::to_string(i) + ": bad number '" + s + "'");
        }
        return v;
      };
      const auto parse_color = [&](int idx) {
        const std::string& s = tok[static_cast<std::size_t>(idx)];
        int v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0 || v > 255) {
          fail(path, "vertex " + std::to_string(i) + ": bad color value '" + s + "'");
        }
        return static_cast<std::uint8_t>(v);
      };
      const double x = parse_double(ix);
      const double y = parse_double(iy);
      const double z = parse_double(iz);
      check_finite(i, x, y, z);
      cloud.positions.col(static_cast<Eigen::Index>(i)) = Eigen::Vector3d(x, y, z);
      cloud.colors(0, static_cast<Eigen::Index>(i)) = parse_color(ir);
      cloud.colors(1, static_cast<Eigen::Index>(i)) = parse_color(ig);
      cloud.colors(2, static_cast<Eigen::Index>(i)) = parse_color(ib);
    }
  }
  return cloud;
}

void save_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  if (cloud.empty()) {
    throw std::invalid_argument("save_ply: refusing to write an empty cloud");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("save_ply: cannot open " + path.string() + " for writing");
  }
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "end_header\n";
  std::vector<unsigned char> buffer;
  buffer.reserve(static_cast<std::size_t>(cloud.size()) * 15);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.positions(0, i)),
                          static_cast<float>(cloud.positions(1, i)),
                          static_cast<float>(cloud.positions(2, i))};
    unsigned char rec[15];
    std::memcpy(rec, xyz, 12);
    rec[12] = cloud.colors(0, i);
    rec[13] = cloud.colors(1, i);
    rec[14] = cloud.colors(2, i);
    buffer.insert(buffer.end(), rec, rec + 15);
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size()));
  if (!out) {
    throw IoError("save_ply: write failed for " + path.string());
  }
}

}  // namespace tbpos
