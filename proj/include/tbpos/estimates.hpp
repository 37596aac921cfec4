#pragma once

#include "tbpos/geometry.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tbpos {

/// One estimated pose per line: `query_id` followed by the 12 entries of the
/// 3x4 matrix [R | t] in row-major order (camera-from-world), or
/// `query_id FAILED` for a query the localizer could not solve.
struct PoseEstimate {
  std::string query_id;
  std::optional<Posed> pose;  // nullopt marks a FAILED record
};

/// Parses an estimates file. Rotations within 1e-3 of orthonormal are
/// re-orthonormalized; anything worse rejects the record. Malformed lines and
/// duplicate query ids throw ParseError with the line number.
std::vector<PoseEstimate> read_estimates(const std::filesystem::path& path);

/// Ranked retrieval candidates: `query_id` followed by database image ids in
/// rank order.
struct CandidateList {
  std::string query_id;
  std::vector<std::string> image_ids;
};

/// Parses a candidates file. Every image id must have the
/// `<scan_id>_<index:03>` shape; duplicates and empty lists are errors.
std::vector<CandidateList> read_candidates(const std::filesystem::path& path);

}  // namespace tbpos
