#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace tbpos {

/// Colored point cloud in the world frame. Stored column-wise so whole-cloud
/// transforms stay single Eigen expressions.
struct PointCloud {
  Eigen::Matrix3Xd positions;                            // meters
  Eigen::Matrix<std::uint8_t, 3, Eigen::Dynamic> colors; // RGB
  std::string scan_id;

  Eigen::Index size() const { return positions.cols(); }
  bool empty() const { return positions.cols() == 0; }

  void resize(Eigen::Index n) {
    positions.resize(3, n);
    colors.resize(3, n);
  }
};

}  // namespace tbpos
