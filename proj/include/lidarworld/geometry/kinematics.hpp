// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "lidarworld/geometry/mesh.hpp"

namespace lidarworld::geometry {

struct Joint {
  std::string name;
  int parent = -1;  ///< -1 for the root; otherwise < own index
  Pose rest;        ///< relative to parent (root: relative to the body frame)
  TriMesh segment;  ///< rigid geometry in the joint frame
};

/// Tree of rigid segments in topological order.
struct KinematicChain {
  std::vector<Joint> joints;

  void validate() const;
  std::size_t size() const { return joints.size(); }
};

/// World transform of every joint: root_pose * rest_0 * R_0 for the root,
/// world_parent * rest_i * R_i otherwise.
std::vector<Pose> joint_transforms(const KinematicChain& chain, std::span<const Mat3> config,
                                   const Pose& root_pose);

/// Union of every posed segment. Throws InvalidArgument when config has a
/// different length than the chain.
TriMesh forward_kinematics(const KinematicChain& chain, std::span<const Mat3> config,
                           const Pose& root_pose);

}  // namespace lidarworld::geometry
