// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/core/pose.hpp"

#include <algorithm>
#include <cmath>

#include "lidarworld/core/error.hpp"

namespace lidarworld {

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  Pose p;
  const double c = std::cos(yaw), s = std::sin(yaw);
  p.rotation << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  p.translation = t;
  return p;
}

Pose Pose::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw InvalidArgument("rotation axis must be non-zero");
  return {rotation_from_vector(axis / n * angle), t};
}

Pose Pose::from_rpy(double roll, double pitch, double yaw, const Vec3& t) {
  const Mat3 rx = Eigen::AngleAxisd(roll, Vec3::UnitX()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(pitch, Vec3::UnitY()).toRotationMatrix();
  return {from_yaw(yaw).rotation * ry * rx, t};
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation.transpose();
  return {rt, -(rt * translation)};
}

double Pose::yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

bool Pose::is_valid(double tol) const noexcept {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

void Pose::validate(double tol) const {
  if (!is_valid(tol)) throw InvalidArgument("pose rotation is not a proper orthonormal matrix");
}

Pose operator*(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Mat3 rotation_from_vector(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

double rotation_angle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  // acos loses precision near zero; use the skew part there.
  const Vec3 s(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * s.norm(), c);
}

bool all_finite(const Vec3& v) noexcept { return v.allFinite(); }

}  // namespace lidarworld
