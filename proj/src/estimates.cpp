#include "tbpos/estimates.hpp"

#include "tbpos/errors.hpp"
#include "tbpos/image_id.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace tbpos {

std::vector<PoseEstimate> read_estimates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_estimates: cannot open " + path.string());
  }
  std::vector<PoseEstimate> estimates;
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
    std::istringstream ss(line);
    PoseEstimate est;
    if (!(ss >> est.query_id)) {
      fail("missing query_id");
    }
    if (!seen.insert(est.query_id).second) {
      fail("duplicate query_id '" + est.query_id + "'");
    }
    std::string first;
    if (!(ss >> first)) {
      fail("expected FAILED or 12 numbers after query_id");
    }
    if (first == "FAILED") {
      std::string extra;
      if (ss >> extra) {
        fail("trailing data after FAILED");
      }
      estimates.push_back(std::move(est));
      continue;
    }
    double v[12];
    {
      std::istringstream num(first);
      if (!(num >> v[0]) || !num.eof()) {
        fail("bad number '" + first + "'");
      }
    }
    for (int i = 1; i < 12; ++i) {
      if (!(ss >> v[i])) {
        fail("expected 12 numbers, got " + std::to_string(i));
      }
    }
    std::string extra;
    if (ss >> extra) {
      fail("trailing data after the 12 numbers");
    }
    Posed pose;
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.translation << v[3], v[7], v[11];
    if (!is_rotation(pose.rotation, 1e-3)) {
      fail("rotation for '" + est.query_id + "' is not orthonormal within 1e-3");
    }
    pose.rotation = orthonormalize(pose.rotation);
    est.pose = pose;
    estimates.push_back(std::move(est));
  }
  return estimates;
}

std::vector<CandidateList> read_candidates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_candidates: cannot open " + path.string());
  }
  std::vector<CandidateList> lists;
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
    std::istringstream ss(line);
    CandidateList list;
    if (!(ss >> list.query_id)) {
      fail("missing query_id");
    }
    if (!seen.insert(list.query_id).second) {
      fail("duplicate query_id '" + list.query_id + "'");
    }
    std::string image_id;
    while (ss >> image_id) {
      if (!scan_id_of_image(image_id)) {
        fail("image id '" + image_id + "' does not match <scan_id>_<index:03>");
      }
      list.image_ids.push_back(std::move(image_id));
    }
    if (list.image_ids.empty()) {
      fail("no candidates listed for '" + list.query_id + "'");
    }
    lists.push_back(std::move(list));
  }
  return lists;
}

}  // namespace tbpos
