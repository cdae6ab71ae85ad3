// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numbers>

#include "lidarworld/core/error.hpp"
#include "lidarworld/geometry/kinematics.hpp"

using namespace lidarworld;
using namespace lidarworld::geometry;

namespace {

// Root at the body origin; child hinged 1 m along +x with a unit stick
// ending 1 m further along its local +x.
KinematicChain two_link() {
  KinematicChain chain;
  TriMesh stick;
  stick.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, 0.1, 0}};
  stick.triangles = {{0, 1, 2}};
  chain.joints.push_back({"root", -1, Pose::identity(), stick});
  chain.joints.push_back({"child", 0, Pose::from_translation(Vec3(1, 0, 0)), stick});
  return chain;
}

}  // namespace

TEST(ForwardKinematics, IdentityConfigIsRestPose) {
  const auto chain = two_link();
  const std::vector<Mat3> config(2, Mat3::Identity());
  const auto mesh = forward_kinematics(chain, config, Pose::identity());
  ASSERT_EQ(mesh.vertices.size(), 6u);
  EXPECT_EQ(mesh.vertices[4], Vec3(2, 0, 0));
  EXPECT_EQ(mesh.triangles[1], (Triangle{3, 4, 5}));
}

TEST(ForwardKinematics, ChildQuarterTurn) {
  const auto chain = two_link();
  const std::vector<Mat3> config{Mat3::Identity(), Pose::from_yaw(std::numbers::pi / 2).rotation};
  const auto mesh = forward_kinematics(chain, config, Pose::identity());
  // Child endpoint: hinge (1,0,0) plus the unit stick rotated to +y.
  EXPECT_LT((mesh.vertices[4] - Vec3(1, 1, 0)).norm(), 1e-12);
  EXPECT_LT((mesh.vertices[3] - Vec3(1, 0, 0)).norm(), 1e-12);
}

TEST(ForwardKinematics, RootRotationCarriesChildren) {
  const auto chain = two_link();
  const std::vector<Mat3> config{Pose::from_yaw(std::numbers::pi / 2).rotation, Mat3::Identity()};
  const auto mesh = forward_kinematics(chain, config, Pose::identity());
  EXPECT_LT((mesh.vertices[4] - Vec3(0, 2, 0)).norm(), 1e-12);
}

TEST(ForwardKinematics, RootTranslationShiftsBounds) {
  const auto chain = two_link();
  const std::vector<Mat3> config(2, Mat3::Identity());
  const auto rest = forward_kinematics(chain, config, Pose::identity()).bounds();
  const auto moved = forward_kinematics(chain, config, Pose::from_translation(Vec3(3, -2, 1))).bounds();
  EXPECT_LT((moved.min - rest.min - Vec3(3, -2, 1)).norm(), 1e-12);
  EXPECT_LT((moved.max - rest.max - Vec3(3, -2, 1)).norm(), 1e-12);
}

TEST(ForwardKinematics, RejectsWrongConfigLength) {
  const auto chain = two_link();
  const std::vector<Mat3> config(3, Mat3::Identity());
  EXPECT_THROW(forward_kinematics(chain, config, Pose::identity()), InvalidArgument);
}

TEST(KinematicChain, ValidateRequiresTopologicalOrder) {
  auto chain = two_link();
  EXPECT_NO_THROW(chain.validate());
  chain.joints[1].parent = 1;
  EXPECT_THROW(chain.validate(), InvalidArgument);
}
