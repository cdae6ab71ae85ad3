// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <vector>

#include "lidarworld/core/pose.hpp"

namespace lidarworld::geometry {

using Triangle = std::array<std::uint32_t, 3>;

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (min.array() > max.array()).any(); }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  /// Closed-interval overlap on every axis.
  bool overlaps(const Aabb& b) const {
    return (min.array() <= b.max.array()).all() && (b.min.array() <= max.array()).all();
  }
  /// Open-interval overlap: boxes that merely touch do not count.
  bool overlaps_strictly(const Aabb& b) const {
    return (min.array() < b.max.array()).all() && (b.min.array() < max.array()).all();
  }
  bool contains(const Aabb& b, double slack = 0.0) const {
    return (b.min.array() >= min.array() - slack).all() &&
           (b.max.array() <= max.array() + slack).all();
  }
};

/// Indexed triangle mesh. `labels` is either empty or holds one integer per triangle.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<std::int32_t> labels;

  bool empty() const { return triangles.empty(); }
  Aabb bounds() const;
  Vec3 triangle_normal(std::size_t t) const;  ///< unit; zero vector for degenerate triangles
  double triangle_area(std::size_t t) const;
  /// Signed enclosed volume (divergence theorem); positive for outward winding.
  double signed_volume() const;

  /// Throws InvalidArgument on bad indices, repeated indices, non-finite
  /// coordinates or a label array of the wrong size.
  void validate() const;

  /// Appends `other`, offsetting its indices. Labels are filled with
  /// `label` for triangles of a mesh that carries none.
  void append(const TriMesh& other, std::int32_t label = 0);
};

TriMesh transform_mesh(const TriMesh& mesh, const Pose& pose);

/// Axis-aligned box with outward winding, 8 vertices and 12 triangles.
TriMesh make_box_mesh(const Vec3& center, const Vec3& half_extents);
/// Rectangle in the z = height plane, two triangles, normal +z.
TriMesh make_quad_mesh(const Vec2& min_xy, const Vec2& max_xy, double height);
/// Latitude/longitude sphere with outward winding.
TriMesh make_uv_sphere(const Vec3& center, double radius, int stacks, int slices);

// Wavefront OBJ subset: "v x y z" and "f i j k" (1-based; "i/j/k" forms
// keep the vertex index). Polygons with more vertices are fan-triangulated.
void write_obj(std::ostream& os, const TriMesh& mesh);
TriMesh read_obj(std::istream& is);
void save_obj(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh load_obj(const std::filesystem::path& path);

}  // namespace lidarworld::geometry
