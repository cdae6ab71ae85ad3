// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/world/actor.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lidarworld/core/error.hpp"

namespace lidarworld::world {

using geometry::Aabb;
using geometry::Joint;
using geometry::KinematicChain;
using geometry::TriMesh;

std::string_view to_string(ActorClass c) {
  switch (c) {
    case ActorClass::kVehicle: return "vehicle";
    case ActorClass::kPedestrian: return "pedestrian";
    case ActorClass::kCustom: return "custom";
  }
  return "custom";
}

ActorClass parse_actor_class(std::string_view s) {
  if (s == "vehicle") return ActorClass::kVehicle;
  if (s == "pedestrian") return ActorClass::kPedestrian;
  if (s == "custom") return ActorClass::kCustom;
  throw InvalidArgument("unknown actor class '" + std::string(s) + "'");
}

TriMesh Actor::rest_mesh() const {
  if (const auto* chain = std::get_if<KinematicChain>(&geometry)) {
    const std::vector<Mat3> rest(chain->size(), Mat3::Identity());
    return geometry::forward_kinematics(*chain, rest, Pose::identity());
  }
  return std::get<TriMesh>(geometry);
}

TriMesh Actor::posed_mesh(const Pose& pose, std::span<const Mat3> joints) const {
  if (const auto* chain = std::get_if<KinematicChain>(&geometry)) {
    if (joints.empty()) {
      const std::vector<Mat3> rest(chain->size(), Mat3::Identity());
      return geometry::forward_kinematics(*chain, rest, pose);
    }
    return geometry::forward_kinematics(*chain, joints, pose);
  }
  return geometry::transform_mesh(std::get<TriMesh>(geometry), pose);
}

void Actor::validate() const {
  if (id < 1) throw InvalidArgument("actor ids start at 1");
  const Vec3 fp = footprint.extents();
  if (!((fp.array() > 0.0).all() && fp.allFinite())) throw InvalidArgument("actor footprint extents must be positive");
  if (const auto* chain = std::get_if<KinematicChain>(&geometry)) {
    chain->validate();
  } else {
    std::get<TriMesh>(geometry).validate();
  }
  const TriMesh mesh = rest_mesh();
  if (mesh.empty()) throw InvalidArgument("actor geometry is empty");
  const Vec3 ext = mesh.bounds().extent();
  for (int k = 0; k < 3; ++k)
    if (std::abs(ext[k] - fp[k]) > 0.05 * fp[k])
      throw InvalidArgument("actor geometry bounds differ from its footprint by more than 5%");
}

Actor rescale_actor(const Actor& actor, const Footprint& target) {
  const Vec3 want = target.extents();
  if (!((want.array() > 0.0).all() && want.allFinite())) throw InvalidArgument("target extents must be positive");
  const Aabb b = actor.local_bounds();
  const Vec3 ext = b.extent();
  if (b.empty() || !(ext.array() > 0.0).all()) throw InvalidArgument("cannot rescale degenerate actor geometry");
  const Vec3 scale = want.cwiseQuotient(ext);
  const Vec3 c{b.center().x(), b.center().y(), b.min.z()};

  Actor out = actor;
  out.footprint = target;
  if (auto* chain = std::get_if<KinematicChain>(&out.geometry)) {
    for (const auto& j : chain->joints)
      if (!j.rest.rotation.isIdentity(1e-12))
        throw InvalidArgument("rescaling articulated actors needs identity rest rotations");
    for (auto& j : chain->joints) {
      if (j.parent < 0) {
        j.rest.translation = c + scale.cwiseProduct(j.rest.translation - c);
      } else {
        j.rest.translation = scale.cwiseProduct(j.rest.translation);
      }
      for (auto& v : j.segment.vertices) v = scale.cwiseProduct(v);
    }
  } else {
    for (auto& v : std::get<TriMesh>(out.geometry).vertices) v = c + scale.cwiseProduct(v - c);
  }
  return out;
}

namespace {

TriMesh box(const Vec3& lo, const Vec3& hi) { return geometry::make_box_mesh(0.5 * (lo + hi), 0.5 * (hi - lo)); }

}  // namespace

Actor make_vehicle(int id, const Footprint& f) {
  const double l = f.length, w = f.width, h = f.height;
  TriMesh mesh = box({-l / 2, -w / 2, 0.25 * h}, {l / 2, w / 2, 0.65 * h});
  mesh.append(box({-0.3 * l, -0.45 * w, 0.65 * h}, {0.25 * l, 0.45 * w, h}));
  for (const double sx : {-1.0, 1.0})
    for (const double sy : {-1.0, 1.0}) {
      const double x = sx * 0.32 * l, y = sy * 0.4 * w;
      mesh.append(box({x - 0.12 * l, y - 0.1 * w, 0.0}, {x + 0.12 * l, y + 0.1 * w, 0.3 * h}));
    }
  Actor a{id, ActorClass::kVehicle, std::move(mesh), f};
  a.validate();
  return a;
}

Actor make_box_actor(int id, const Footprint& f) {
  Actor a{id, ActorClass::kCustom, box({-f.length / 2, -f.width / 2, 0.0}, {f.length / 2, f.width / 2, f.height}), f};
  a.validate();
  return a;
}

Actor make_pedestrian(int id, const Footprint& f) {
  const double l = f.length, w = f.width, h = f.height;
  auto joint = [](std::string name, int parent, const Vec3& offset, TriMesh segment) {
    return Joint{std::move(name), parent, Pose::from_translation(offset), std::move(segment)};
  };
  auto limb = [&] { return box({-0.3 * l, -0.12 * w, -0.25 * h}, {0.3 * l, 0.12 * w, 0.0}); };
  KinematicChain chain;
  chain.joints.push_back(joint("pelvis", -1, {0, 0, 0.5 * h}, box({-0.4 * l, -0.35 * w, -0.05 * h}, {0.4 * l, 0.35 * w, 0.05 * h})));
  chain.joints.push_back(joint("torso", 0, {0, 0, 0}, box({-l / 2, -w / 2, 0.0}, {l / 2, w / 2, 0.35 * h})));
  chain.joints.push_back(joint("head", 1, {0, 0, 0.35 * h}, box({-0.3 * l, -0.2 * w, 0.0}, {0.3 * l, 0.2 * w, 0.15 * h})));
  chain.joints.push_back(joint("left_hip", 0, {0, 0.25 * w, 0}, limb()));
  chain.joints.push_back(joint("left_knee", 3, {0, 0, -0.25 * h}, limb()));
  chain.joints.push_back(joint("right_hip", 0, {0, -0.25 * w, 0}, limb()));
  chain.joints.push_back(joint("right_knee", 5, {0, 0, -0.25 * h}, limb()));
  Actor a{id, ActorClass::kPedestrian, std::move(chain), f};
  a.validate();
  return a;
}

std::vector<Mat3> walk_cycle(double t, double period) {
  if (!(period > 0.0)) throw InvalidArgument("gait period must be positive");
  constexpr double kHipAmplitude = 25.0 * std::numbers::pi / 180.0;
  constexpr double kKneeAmplitude = 40.0 * std::numbers::pi / 180.0;
  const double phase = 2.0 * std::numbers::pi * t / period;
  const Vec3 lateral = Vec3::UnitY();
  const double swing = kHipAmplitude * std::sin(phase);
  std::vector<Mat3> config(7, Mat3::Identity());
  config[3] = rotation_from_vector(lateral * swing);
  config[4] = rotation_from_vector(lateral * (kKneeAmplitude * 0.5 * (1.0 - std::cos(phase))));
  config[5] = rotation_from_vector(lateral * -swing);
  config[6] = rotation_from_vector(lateral * (kKneeAmplitude * 0.5 * (1.0 + std::cos(phase))));
  return config;
}

}  // namespace lidarworld::world
