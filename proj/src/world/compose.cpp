// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/world/compose.hpp"

#include <algorithm>
#include <cmath>

#include "lidarworld/core/error.hpp"

namespace lidarworld::world {

ComposedScene::ComposedScene(std::shared_ptr<const geometry::Bvh> static_bvh, geometry::TriMesh dynamic)
    : static_bvh_(std::move(static_bvh)) {
  if (!dynamic.empty()) {
    dynamic_mesh_ = std::make_shared<const geometry::TriMesh>(std::move(dynamic));
    dynamic_bvh_ = std::make_shared<const geometry::Bvh>(dynamic_mesh_);
  }
}

std::size_t ComposedScene::static_triangle_count() const {
  return static_bvh_ ? static_bvh_->mesh().triangles.size() : 0;
}

std::size_t ComposedScene::triangle_count() const {
  return static_triangle_count() + (dynamic_mesh_ ? dynamic_mesh_->triangles.size() : 0);
}

std::int32_t ComposedScene::label_of(std::uint32_t id) const {
  const std::size_t n = static_triangle_count();
  if (id < n) return 0;
  if (!dynamic_mesh_ || id - n >= dynamic_mesh_->triangles.size()) throw InvalidArgument("triangle id out of range");
  return dynamic_mesh_->labels[id - n];
}

geometry::TriMesh ComposedScene::merged_mesh() const {
  geometry::TriMesh out;
  if (static_bvh_) {
    out = static_bvh_->mesh();
    out.labels.assign(out.triangles.size(), 0);
  }
  if (dynamic_mesh_) out.append(*dynamic_mesh_);
  return out;
}

std::optional<geometry::Hit> ComposedScene::raycast(const Vec3& origin, const Vec3& dir, double max_range) const {
  if (std::abs(dir.norm() - 1.0) > 1e-9) throw InvalidArgument("ray direction must be unit length");
  if (!(max_range > 0.0)) throw InvalidArgument("max_range must be positive");
  std::optional<geometry::Hit> s = static_bvh_ ? static_bvh_->raycast(origin, dir, max_range) : std::nullopt;
  std::optional<geometry::Hit> d = dynamic_bvh_ ? dynamic_bvh_->raycast(origin, dir, max_range) : std::nullopt;
  if (d) d->triangle_id += static_cast<std::uint32_t>(static_triangle_count());
  if (!d) return s;
  if (!s) return d;
  return d->distance < s->distance ? d : s;
}

ComposedScene compose(const WorldScene& scene, const TimeStep& step) {
  geometry::TriMesh dynamic;
  for (const auto& actor : scene.actors) {
    const auto it = std::find_if(step.actors.begin(), step.actors.end(),
                                 [&](const ActorState& s) { return s.actor_id == actor.id; });
    if (it == step.actors.end()) throw InvalidArgument("no pose for actor " + std::to_string(actor.id));
    geometry::TriMesh posed = actor.posed_mesh(it->pose, it->joints);
    posed.labels.assign(posed.triangles.size(), actor.id);
    dynamic.append(posed);
  }
  return ComposedScene(scene.static_bvh, std::move(dynamic));
}

}  // namespace lidarworld::world
