// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lidarworld {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform in SE(3): x -> rotation * x + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero());
  static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero());
  /// Roll about x, then pitch about y, then yaw about z (R = Rz * Ry * Rx).
  static Pose from_rpy(double roll, double pitch, double yaw, const Vec3& t = Vec3::Zero());

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Pose inverse() const;
  double yaw() const;

  /// Throws InvalidArgument unless R^T R = I and det R = 1 within `tol`, and all entries finite.
  void validate(double tol = 1e-9) const;
  bool is_valid(double tol = 1e-9) const noexcept;
};

/// Composition: (a * b).apply(x) == a.apply(b.apply(x)).
Pose operator*(const Pose& a, const Pose& b);

/// Rotation by the vector `omega` (axis * angle), exact Rodrigues form.
Mat3 rotation_from_vector(const Vec3& omega);

/// Geodesic angle of a rotation matrix, radians.
double rotation_angle(const Mat3& r);

bool all_finite(const Vec3& v) noexcept;

}  // namespace lidarworld
