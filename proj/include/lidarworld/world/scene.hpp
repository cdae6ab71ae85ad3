// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lidarworld/geometry/bvh.hpp"
#include "lidarworld/world/actor.hpp"

namespace lidarworld::world {

/// Static world geometry plus the actors that move through it.
struct WorldScene {
  std::shared_ptr<const geometry::TriMesh> static_mesh;
  std::shared_ptr<const geometry::Bvh> static_bvh;  ///< null when the static mesh is empty
  std::vector<Actor> actors;

  static WorldScene from_mesh(geometry::TriMesh mesh, std::vector<Actor> actors = {});
  const Actor* find_actor(int id) const;
  void validate() const;
};

/// Height of the first static surface below (x, y, z_top), or nullopt over
/// areas without geometry.
std::optional<double> ground_height(const WorldScene& scene, double x, double y, double z_top = 100.0);

struct CollisionParams {
  double margin = 0.1;            ///< box inflation against static geometry, meters
  double ground_clearance = 0.3;  ///< box bottom above the actor's base, meters
};

struct CollisionReport {
  bool static_hit = false;
  bool actor_hit = false;
  bool off_mesh = false;
  bool clean() const { return !static_hit && !actor_hit && !off_mesh; }
};

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  ///< columns are the box axes
  Vec3 half = Vec3::Zero();

  geometry::Aabb world_bounds() const;
};

/// Separating-axis test between a box and a triangle (13 candidate axes).
bool box_intersects_triangle(const OrientedBox& box, const Vec3& a, const Vec3& b, const Vec3& c);

/// Box checked against static geometry: local bounds inflated by the margin
/// horizontally and on top, with the bottom raised by the ground clearance.
OrientedBox static_check_box(const geometry::Aabb& local_bounds, const Pose& pose, const CollisionParams& params);

/// World-axis bounds of the posed local bounds (no inflation).
geometry::Aabb posed_bounds(const geometry::Aabb& local_bounds, const Pose& pose);

CollisionReport check_collision(const WorldScene& scene, const geometry::TriMesh& actor_geometry,
                                const Pose& pose, std::span<const geometry::Aabb> others,
                                const CollisionParams& params = {});

/// Same test from precomputed local bounds.
CollisionReport check_collision(const WorldScene& scene, const geometry::Aabb& local_bounds,
                                const Pose& pose, std::span<const geometry::Aabb> others,
                                const CollisionParams& params = {});

}  // namespace lidarworld::world
