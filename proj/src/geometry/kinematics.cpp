// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/geometry/kinematics.hpp"

#include "lidarworld/core/error.hpp"

namespace lidarworld::geometry {

void KinematicChain::validate() const {
  if (joints.empty()) throw InvalidArgument("kinematic chain has no joints");
  if (joints[0].parent != -1) throw InvalidArgument("joint 0 must be the root");
  for (std::size_t i = 1; i < joints.size(); ++i)
    if (joints[i].parent < 0 || static_cast<std::size_t>(joints[i].parent) >= i)
      throw InvalidArgument("joint " + joints[i].name + " parent must precede it");
  for (const auto& j : joints) {
    j.rest.validate();
    j.segment.validate();
  }
}

std::vector<Pose> joint_transforms(const KinematicChain& chain, std::span<const Mat3> config,
                                   const Pose& root_pose) {
  if (config.size() != chain.size())
    throw InvalidArgument("joint configuration has " + std::to_string(config.size()) +
                          " entries for a chain of " + std::to_string(chain.size()));
  std::vector<Pose> world(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Joint& j = chain.joints[i];
    const Pose local = j.rest * Pose{config[i], Vec3::Zero()};
    world[i] = (j.parent < 0 ? root_pose : world[static_cast<std::size_t>(j.parent)]) * local;
  }
  return world;
}

TriMesh forward_kinematics(const KinematicChain& chain, std::span<const Mat3> config,
                           const Pose& root_pose) {
  const auto world = joint_transforms(chain, config, root_pose);
  TriMesh out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const TriMesh posed = transform_mesh(chain.joints[i].segment, world[i]);
    const auto offset = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), posed.vertices.begin(), posed.vertices.end());
    for (const auto& t : posed.triangles)
      out.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  }
  return out;
}

}  // namespace lidarworld::geometry
