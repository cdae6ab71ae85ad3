// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>

#include "lidarworld/geometry/bvh.hpp"
#include "lidarworld/world/scene.hpp"
#include "lidarworld/world/trajectory.hpp"

namespace lidarworld::world {

/// The world at one timestep. Static triangles keep their ids and label 0;
/// actor triangles follow with ids offset by the static count and carry
/// their actor id as label. Ray queries behave as one BVH over the merged mesh.
class ComposedScene {
 public:
  ComposedScene() = default;
  ComposedScene(std::shared_ptr<const geometry::Bvh> static_bvh, geometry::TriMesh dynamic);

  std::size_t static_triangle_count() const;
  std::size_t triangle_count() const;
  bool empty() const { return triangle_count() == 0; }
  std::int32_t label_of(std::uint32_t triangle_id) const;
  geometry::TriMesh merged_mesh() const;

  /// Nearest hit over both parts; ties resolve to the lowest merged id.
  std::optional<geometry::Hit> raycast(const Vec3& origin, const Vec3& dir, double max_range) const;

 private:
  std::shared_ptr<const geometry::Bvh> static_bvh_;
  std::shared_ptr<const geometry::TriMesh> dynamic_mesh_;
  std::shared_ptr<const geometry::Bvh> dynamic_bvh_;
};

/// Places every scene actor at its pose in `step`. Throws InvalidArgument
/// when an actor has no pose.
ComposedScene compose(const WorldScene& scene, const TimeStep& step);

}  // namespace lidarworld::world
