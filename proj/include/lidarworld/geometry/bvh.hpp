// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lidarworld/geometry/mesh.hpp"
#include "lidarworld/simd/kernels.hpp"

namespace lidarworld::geometry {

struct Hit {
  double distance = 0.0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  ///< unit, dot(normal, dir) <= 0
  std::uint32_t triangle_id = 0;
};

/// Hits closer than this to the ray origin are ignored.
inline constexpr double kSelfHitEpsilon = 1e-6;

/// Bounding volume hierarchy over a shared, immutable TriMesh. Leaves hold at
/// most four triangles stored as one SoA packet for the SIMD intersector.
/// Zero-area triangles are left out (see degenerate_count()).
class Bvh {
 public:
  struct Node {
    Aabb bounds;
    std::uint32_t left = 0;   ///< first child index, or packet index for leaves
    std::uint32_t right = 0;  ///< second child index
    std::uint32_t count = 0;  ///< triangles in leaf; 0 for interior nodes
    bool is_leaf() const { return count > 0; }
  };

  /// Throws InvalidArgument for an empty mesh or one with no usable triangle.
  explicit Bvh(std::shared_ptr<const TriMesh> mesh);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Original triangle id for each slot; leaf with packet p owns slots [4p, 4p + count).
  const std::vector<std::uint32_t>& triangle_order() const { return order_; }
  std::size_t degenerate_count() const { return degenerate_; }
  Aabb bounds() const { return nodes_.front().bounds; }

  /// Nearest hit with distance in (kSelfHitEpsilon, max_range]; ties resolve
  /// to the lowest triangle id. Throws InvalidArgument unless |dir| = 1
  /// within 1e-9 and max_range > 0.
  std::optional<Hit> raycast(const Vec3& origin, const Vec3& dir, double max_range) const;

  /// Original ids of triangles whose bounds overlap `box`.
  std::vector<std::uint32_t> query(const Aabb& box) const;

 private:
  std::uint32_t build(std::vector<std::uint32_t>& ids, std::vector<Vec3>& centroids,
                      std::size_t begin, std::size_t end, int depth);
  Aabb triangle_bounds(std::uint32_t t) const;

  std::shared_ptr<const TriMesh> mesh_;
  std::vector<Node> nodes_;
  std::vector<simd::TrianglePacket> packets_;
  std::vector<std::uint32_t> order_;
  std::size_t degenerate_ = 0;
};

Bvh build_bvh(const TriMesh& mesh);

/// Reference intersection against every triangle, same tie rule as Bvh::raycast.
std::optional<Hit> raycast_brute_force(const TriMesh& mesh, const Vec3& origin, const Vec3& dir,
                                       double max_range);

}  // namespace lidarworld::geometry
