// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>
#include <variant>

#include "lidarworld/geometry/kinematics.hpp"
#include "lidarworld/geometry/mesh.hpp"

namespace lidarworld::world {

enum class ActorClass { kVehicle, kPedestrian, kCustom };

std::string_view to_string(ActorClass c);
ActorClass parse_actor_class(std::string_view s);

/// Box extents along the actor's forward (x), left (y) and up (z) axes.
struct Footprint {
  double length = 4.5, width = 2.0, height = 1.6;
  Vec3 extents() const { return {length, width, height}; }
};

/// Traffic participant. Geometry lives in the actor frame: +x forward, z up,
/// footprint centered on the origin in x/y with its bottom at z = 0.
/// Rigid actors carry a TriMesh; pedestrians carry a kinematic chain.
struct Actor {
  int id = 1;  ///< >= 1; 0 labels the static world
  ActorClass cls = ActorClass::kVehicle;
  std::variant<geometry::TriMesh, geometry::KinematicChain> geometry;
  Footprint footprint;

  bool articulated() const { return std::holds_alternative<geometry::KinematicChain>(geometry); }
  /// Mesh at rest (identity joint configuration for pedestrians).
  geometry::TriMesh rest_mesh() const;
  geometry::Aabb local_bounds() const { return rest_mesh().bounds(); }
  /// Posed mesh; `joints` is ignored for rigid actors.
  geometry::TriMesh posed_mesh(const Pose& pose, std::span<const Mat3> joints) const;

  /// Throws InvalidArgument unless extents are positive, id >= 1 and the
  /// rest-mesh bounds match the footprint within 5% per axis.
  void validate() const;
};

/// Anisotropic scaling about the bottom center of the current bounds so the
/// bounds match `target`. Articulated actors need identity rest rotations.
Actor rescale_actor(const Actor& actor, const Footprint& target);

/// Procedural car: body, cabin and four wheels filling the footprint.
Actor make_vehicle(int id, const Footprint& footprint = {});
/// Box-shaped custom actor.
Actor make_box_actor(int id, const Footprint& footprint);
/// Seven-joint walker (pelvis, torso, head, two hips, two knees).
Actor make_pedestrian(int id, const Footprint& footprint = {0.5, 0.6, 1.75});

/// Built-in walking cycle for make_pedestrian chains: sinusoidal hip swing
/// and knee flexion about the lateral axis with the given period.
std::vector<Mat3> walk_cycle(double t, double period = 1.2);

}  // namespace lidarworld::world
