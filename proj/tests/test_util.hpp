// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>

#include "lidarworld/core/pose.hpp"
#include "lidarworld/core/rng.hpp"

namespace lidarworld::test {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

inline Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Pose random_pose(Rng& rng, double max_translation, double max_angle) {
  const Vec3 axis = random_unit(rng);
  const double angle = rng.uniform(-max_angle, max_angle);
  const Vec3 t(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return Pose::from_axis_angle(axis, angle, t * max_translation / std::sqrt(3.0));
}

}  // namespace lidarworld::test
