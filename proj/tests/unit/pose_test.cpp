// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numbers>

#include "lidarworld/core/error.hpp"
#include "lidarworld/core/pose.hpp"
#include "test_util.hpp"

using namespace lidarworld;
using lidarworld::test::random_pose;

TEST(Pose, CompositionIsAssociative) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(rng, 10, 3), b = random_pose(rng, 10, 3), c = random_pose(rng, 10, 3);
    const Pose l = (a * b) * c, r = a * (b * c);
    EXPECT_LT((l.rotation - r.rotation).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((l.translation - r.translation).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Pose, InverseUndoes) {
  Rng rng(2);
  const Pose p = random_pose(rng, 5, 2);
  const Vec3 x(0.3, -2, 7);
  EXPECT_LT((p.inverse().apply(p.apply(x)) - x).norm(), 1e-12);
  EXPECT_TRUE((p * p.inverse()).is_valid());
}

TEST(Pose, ValidateRejectsNonOrthonormal) {
  Pose p;
  p.rotation(0, 0) = 1.1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  Pose reflect;
  reflect.rotation(2, 2) = -1;
  EXPECT_THROW(reflect.validate(), InvalidArgument);
}

TEST(Pose, YawAndRotationAngle) {
  const Pose p = Pose::from_yaw(0.7);
  EXPECT_NEAR(p.yaw(), 0.7, 1e-15);
  EXPECT_NEAR(rotation_angle(p.rotation), 0.7, 1e-12);
  EXPECT_NEAR(rotation_angle(Pose::from_axis_angle(Vec3(1, 2, 3), 1e-7).rotation), 1e-7, 1e-18);
}
