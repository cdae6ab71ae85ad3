// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/world/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "lidarworld/core/error.hpp"

namespace lidarworld::world {

using geometry::Aabb;

WorldScene WorldScene::from_mesh(geometry::TriMesh mesh, std::vector<Actor> actors) {
  mesh.validate();
  WorldScene scene;
  auto shared = std::make_shared<const geometry::TriMesh>(std::move(mesh));
  if (!shared->empty()) scene.static_bvh = std::make_shared<const geometry::Bvh>(shared);
  scene.static_mesh = std::move(shared);
  scene.actors = std::move(actors);
  scene.validate();
  return scene;
}

const Actor* WorldScene::find_actor(int id) const {
  const auto it = std::find_if(actors.begin(), actors.end(), [id](const Actor& a) { return a.id == id; });
  return it == actors.end() ? nullptr : &*it;
}

void WorldScene::validate() const {
  if (!static_mesh) throw InvalidArgument("scene has no static mesh");
  if (static_bvh && static_bvh->mesh_ptr() != static_mesh)
    throw InvalidArgument("static BVH does not reference the static mesh");
  if (!static_bvh && !static_mesh->empty()) throw InvalidArgument("static mesh has no BVH");
  std::set<int> ids;
  for (const auto& a : actors) {
    a.validate();
    if (!ids.insert(a.id).second) throw InvalidArgument("duplicate actor id " + std::to_string(a.id));
  }
}

std::optional<double> ground_height(const WorldScene& scene, double x, double y, double z_top) {
  if (!scene.static_bvh) return std::nullopt;
  const double range = z_top - scene.static_bvh->bounds().min.z() + 1.0;
  if (!(range > 0.0) || !std::isfinite(range)) return std::nullopt;
  const auto hit = scene.static_bvh->raycast({x, y, z_top}, -Vec3::UnitZ(), range);
  if (!hit) return std::nullopt;
  return hit->point.z();
}

Aabb OrientedBox::world_bounds() const {
  const Vec3 r = axes.cwiseAbs() * half;
  return {center - r, center + r};
}

bool box_intersects_triangle(const OrientedBox& box, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Mat3 rt = box.axes.transpose();
  const std::array<Vec3, 3> v{rt * (a - box.center), rt * (b - box.center), rt * (c - box.center)};
  const Vec3& h = box.half;
  auto separated = [&](const Vec3& axis) {
    const double p0 = axis.dot(v[0]), p1 = axis.dot(v[1]), p2 = axis.dot(v[2]);
    const double r = h.dot(axis.cwiseAbs());
    return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
  };
  for (int k = 0; k < 3; ++k)
    if (separated(Vec3::Unit(k))) return false;
  const std::array<Vec3, 3> edges{v[1] - v[0], v[2] - v[1], v[0] - v[2]};
  const Vec3 n = edges[0].cross(edges[1]);
  if (n.squaredNorm() > 0.0 && separated(n)) return false;
  for (int k = 0; k < 3; ++k)
    for (const auto& e : edges) {
      const Vec3 axis = Vec3::Unit(k).cross(e);
      if (axis.squaredNorm() > 0.0 && separated(axis)) return false;
    }
  return true;
}

OrientedBox static_check_box(const Aabb& b, const Pose& pose, const CollisionParams& p) {
  Vec3 lo{b.min.x() - p.margin, b.min.y() - p.margin, b.min.z() + p.ground_clearance};
  const Vec3 hi{b.max.x() + p.margin, b.max.y() + p.margin, b.max.z() + p.margin};
  lo.z() = std::min(lo.z(), hi.z());
  return {pose.apply(0.5 * (lo + hi)), pose.rotation, 0.5 * (hi - lo)};
}

Aabb posed_bounds(const Aabb& b, const Pose& pose) {
  Aabb out;
  for (int i = 0; i < 8; ++i)
    out.expand(pose.apply({(i & 1) ? b.max.x() : b.min.x(), (i & 2) ? b.max.y() : b.min.y(),
                           (i & 4) ? b.max.z() : b.min.z()}));
  return out;
}

CollisionReport check_collision(const WorldScene& scene, const Aabb& local_bounds, const Pose& pose,
                                std::span<const Aabb> others, const CollisionParams& params) {
  CollisionReport report;
  const Vec3 base = pose.apply({local_bounds.center().x(), local_bounds.center().y(), local_bounds.min.z()});
  report.off_mesh = !ground_height(scene, base.x(), base.y()).has_value();

  if (scene.static_bvh) {
    const OrientedBox box = static_check_box(local_bounds, pose, params);
    const auto& mesh = scene.static_bvh->mesh();
    for (const auto t : scene.static_bvh->query(box.world_bounds())) {
      const auto& tri = mesh.triangles[t];
      if (box_intersects_triangle(box, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]])) {
        report.static_hit = true;
        break;
      }
    }
  }

  const Aabb mine = posed_bounds(local_bounds, pose);
  report.actor_hit = std::any_of(others.begin(), others.end(), [&](const Aabb& o) { return mine.overlaps_strictly(o); });
  return report;
}

CollisionReport check_collision(const WorldScene& scene, const geometry::TriMesh& actor_geometry, const Pose& pose,
                                std::span<const Aabb> others, const CollisionParams& params) {
  if (actor_geometry.empty()) throw InvalidArgument("actor geometry is empty");
  return check_collision(scene, actor_geometry.bounds(), pose, others, params);
}

}  // namespace lidarworld::world
