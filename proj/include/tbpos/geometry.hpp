#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace tbpos {

inline constexpr double kPi = 3.14159265358979323846;

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * Scalar(kPi / 180.0);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180.0 / kPi);
}

/// Rigid camera pose in camera-from-world convention: X_cam = R * X_world + t.
///
/// The world frame is right-handed with Z up. The camera frame has +Z along
/// the optical axis, +X right, +Y down.
template <typename Scalar>
struct Pose {
  Eigen::Matrix3<Scalar> rotation = Eigen::Matrix3<Scalar>::Identity();
  Eigen::Vector3<Scalar> translation = Eigen::Vector3<Scalar>::Zero();

  /// Camera center in world coordinates, C = -R^T t.
  Eigen::Vector3<Scalar> camera_center() const {
    return -(rotation.transpose() * translation);
  }

  /// Maps a world point into the camera frame.
  Eigen::Vector3<Scalar> to_camera(const Eigen::Vector3<Scalar>& x_world) const {
    return rotation * x_world + translation;
  }

  /// Maps a camera-frame point back to world coordinates.
  Eigen::Vector3<Scalar> to_world(const Eigen::Vector3<Scalar>& x_cam) const {
    return rotation.transpose() * (x_cam - translation);
  }
};

using Posed = Pose<double>;
using Posef = Pose<float>;

/// compose(a, b) applies b first, then a: (a∘b)(x) = a(b(x)).
template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  Pose<Scalar> out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

template <typename Scalar>
Pose<Scalar> invert(const Pose<Scalar>& p) {
  Pose<Scalar> out;
  out.rotation = p.rotation.transpose();
  out.translation = -(p.rotation.transpose() * p.translation);
  return out;
}

/// Max absolute entry of R^T R - I; 0 for a perfectly orthonormal matrix.
template <typename Scalar>
Scalar orthonormality_error(const Eigen::Matrix3<Scalar>& r) {
  return (r.transpose() * r - Eigen::Matrix3<Scalar>::Identity())
      .cwiseAbs()
      .maxCoeff();
}

template <typename Scalar>
bool is_rotation(const Eigen::Matrix3<Scalar>& r, Scalar tol) {
  return orthonormality_error(r) <= tol &&
         std::abs(r.determinant() - Scalar(1)) <= tol;
}

/// Projects an arbitrary matrix onto SO(3) via SVD (nearest rotation in the
/// Frobenius sense). The determinant sign is fixed to +1.
template <typename Scalar>
Eigen::Matrix3<Scalar> orthonormalize(const Eigen::Matrix3<Scalar>& r) {
  Eigen::JacobiSVD<Eigen::Matrix3<Scalar>> svd(
      r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3<Scalar> u = svd.matrixU();
  Eigen::Matrix3<Scalar> v = svd.matrixV();
  Eigen::Vector3<Scalar> s = Eigen::Vector3<Scalar>::Ones();
  s(2) = (u * v.transpose()).determinant() < Scalar(0) ? Scalar(-1) : Scalar(1);
  return u * s.asDiagonal() * v.transpose();
}

/// Euclidean distance between the two camera centers, in meters.
template <typename Scalar>
Scalar translation_error(const Pose<Scalar>& gt, const Pose<Scalar>& est) {
  return (gt.camera_center() - est.camera_center()).norm();
}

/// Relative rotation angle in degrees, theta = acos((trace(R_gt R_est^T) - 1) / 2).
/// The cosine argument is clamped to [-1, 1] so the result is stable near 0
/// and 180 degrees.
template <typename Scalar>
Scalar rotation_error(const Pose<Scalar>& gt, const Pose<Scalar>& est) {
  if (gt.rotation == est.rotation) {
    return Scalar(0);  // identical rotations short-circuit past acos noise
  }
  const Scalar tr = (gt.rotation * est.rotation.transpose()).trace();
  const Scalar c = std::clamp((tr - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  return rad_to_deg(std::acos(c));
}

/// Orientation as yaw/pitch/roll in degrees, applied in that order about
/// world-Z, camera-X and camera-Z respectively. Yaw 0 points the optical axis
/// along world +X; positive pitch tilts it up; positive yaw turns it
/// counterclockwise seen from above (+X toward +Y).
template <typename Scalar>
struct EulerAngles {
  Scalar yaw = Scalar(0);
  Scalar pitch = Scalar(0);
  Scalar roll = Scalar(0);
};

using EulerAnglesd = EulerAngles<double>;

namespace detail {

/// World-from-camera rotation of the reference orientation: optical axis
/// along world +X, image up along world +Z. Columns are the camera axes
/// (right, down, forward) expressed in world coordinates.
template <typename Scalar>
Eigen::Matrix3<Scalar> base_world_from_camera() {
  Eigen::Matrix3<Scalar> m;
  m << Scalar(0), Scalar(0), Scalar(1),
       Scalar(-1), Scalar(0), Scalar(0),
       Scalar(0), Scalar(-1), Scalar(0);
  return m;
}

template <typename Scalar>
Eigen::Matrix3<Scalar> rot_x(Scalar rad) {
  return Eigen::AngleAxis<Scalar>(rad, Eigen::Vector3<Scalar>::UnitX())
      .toRotationMatrix();
}

template <typename Scalar>
Eigen::Matrix3<Scalar> rot_z(Scalar rad) {
  return Eigen::AngleAxis<Scalar>(rad, Eigen::Vector3<Scalar>::UnitZ())
      .toRotationMatrix();
}

}  // namespace detail

/// Builds the camera-from-world pose of a camera at `position` with the given
/// orientation. Throws std::invalid_argument for |pitch| >= 90 (gimbal
/// degenerate; yaw and roll are no longer distinct there).
template <typename Scalar>
Pose<Scalar> pose_from_euler(const Eigen::Vector3<Scalar>& position,
                             const EulerAngles<Scalar>& angles) {
  if (!(std::abs(angles.pitch) < Scalar(90))) {
    throw std::invalid_argument("pose_from_euler: pitch must lie in (-90, 90) deg");
  }
  const Eigen::Matrix3<Scalar> world_from_cam =
      detail::rot_z(deg_to_rad(angles.yaw)) *
      detail::base_world_from_camera<Scalar>() *
      detail::rot_x(deg_to_rad(angles.pitch)) *
      detail::rot_z(deg_to_rad(angles.roll));
  Pose<Scalar> pose;
  pose.rotation = world_from_cam.transpose();
  pose.translation = -(pose.rotation * position);
  return pose;
}

/// Inverse of pose_from_euler. Valid for pitch strictly inside (-90, 90).
template <typename Scalar>
EulerAngles<Scalar> euler_from_pose(const Pose<Scalar>& pose) {
  const Eigen::Matrix3<Scalar> world_from_cam = pose.rotation.transpose();
  const Eigen::Vector3<Scalar> forward = world_from_cam.col(2);
  EulerAngles<Scalar> angles;
  angles.pitch = rad_to_deg(std::asin(std::clamp(forward.z(), Scalar(-1), Scalar(1))));
  angles.yaw = rad_to_deg(std::atan2(forward.y(), forward.x()));
  const Eigen::Matrix3<Scalar> no_roll =
      detail::rot_z(deg_to_rad(angles.yaw)) *
      detail::base_world_from_camera<Scalar>() *
      detail::rot_x(deg_to_rad(angles.pitch));
  const Eigen::Matrix3<Scalar> roll_only = no_roll.transpose() * world_from_cam;
  angles.roll = rad_to_deg(std::atan2(roll_only(1, 0), roll_only(0, 0)));
  return angles;
}

/// Pinhole intrinsics: square pixels, focal length in pixels, principal point
/// fixed at the image center (width/2, height/2).
template <typename Scalar>
struct CameraIntrinsics {
  Scalar focal_px = Scalar(0);
  int width = 0;
  int height = 0;

  Scalar cx() const { return Scalar(width) / Scalar(2); }
  Scalar cy() const { return Scalar(height) / Scalar(2); }

  /// Continuous pixel coordinates of a camera-frame point; no bounds check,
  /// caller guarantees z > 0.
  Eigen::Vector2<Scalar> project(const Eigen::Vector3<Scalar>& p_cam) const {
    return {focal_px * p_cam.x() / p_cam.z() + cx(),
            focal_px * p_cam.y() / p_cam.z() + cy()};
  }

  /// Camera-frame point of pixel (u, v) at the given depth along +Z.
  Eigen::Vector3<Scalar> backproject(Scalar u, Scalar v, Scalar depth) const {
    return {depth * (u - cx()) / focal_px, depth * (v - cy()) / focal_px, depth};
  }

  Scalar hfov_deg() const {
    return Scalar(2) * rad_to_deg(std::atan2(Scalar(width) / Scalar(2), focal_px));
  }
};

using CameraIntrinsicsd = CameraIntrinsics<double>;

/// Intrinsics for a given horizontal field of view: f = (width/2) / tan(hfov/2).
template <typename Scalar>
CameraIntrinsics<Scalar> intrinsics_from_fov(Scalar hfov_deg, int width, int height) {
  if (!(hfov_deg > Scalar(0)) || !(hfov_deg < Scalar(180))) {
    throw std::invalid_argument("intrinsics_from_fov: hfov must lie in (0, 180) deg");
  }
  if (width < 2 || height < 2) {
    throw std::invalid_argument("intrinsics_from_fov: resolution must be at least 2x2");
  }
  CameraIntrinsics<Scalar> intr;
  intr.focal_px = (Scalar(width) / Scalar(2)) / std::tan(deg_to_rad(hfov_deg / Scalar(2)));
  intr.width = width;
  intr.height = height;
  return intr;
}

}  // namespace tbpos
