// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/geometry/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lidarworld/core/error.hpp"

namespace lidarworld::geometry {
namespace {

constexpr std::uint32_t kEmptySlot = std::numeric_limits<std::uint32_t>::max();
constexpr std::size_t kLeafSize = simd::kPacketWidth;

// Node boxes are padded so rounding in the slab test can never reject a box
// whose triangle the intersector would accept.
double pad_for(double c) { return 1e-10 + 1e-13 * std::abs(c); }

bool is_degenerate(const TriMesh& m, std::uint32_t t) {
  const auto& tri = m.triangles[t];
  const Vec3 n = (m.vertices[tri[1]] - m.vertices[tri[0]]).cross(m.vertices[tri[2]] - m.vertices[tri[0]]);
  return n.squaredNorm() == 0.0;
}

void fill_lane(simd::TrianglePacket& p, std::size_t lane, const TriMesh& m, std::uint32_t t) {
  const auto& tri = m.triangles[t];
  const Vec3& v0 = m.vertices[tri[0]];
  const Vec3 e1 = m.vertices[tri[1]] - v0;
  const Vec3 e2 = m.vertices[tri[2]] - v0;
  p.v0x[lane] = v0.x();
  p.v0y[lane] = v0.y();
  p.v0z[lane] = v0.z();
  p.e1x[lane] = e1.x();
  p.e1y[lane] = e1.y();
  p.e1z[lane] = e1.z();
  p.e2x[lane] = e2.x();
  p.e2y[lane] = e2.y();
  p.e2z[lane] = e2.z();
}

simd::TrianglePacket zero_packet() {
  simd::TrianglePacket p;
  std::fill_n(&p.v0x[0], sizeof(p) / sizeof(double), 0.0);
  return p;
}

struct RayFrame {
  Vec3 origin;
  Vec3 inv;
  std::array<bool, 3> parallel;
};

// Entry distance of the ray into `b`, or +inf when it misses within t_max.
double slab_entry(const Aabb& b, const RayFrame& r, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    if (r.parallel[a]) {
      if (r.origin[a] < b.min[a] || r.origin[a] > b.max[a])
        return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (b.min[a] - r.origin[a]) * r.inv[a];
    double tb = (b.max[a] - r.origin[a]) * r.inv[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0;
}

void check_ray(const Vec3& dir, double max_range) {
  if (!dir.allFinite() || std::abs(dir.norm() - 1.0) > 1e-9)
    throw InvalidArgument("ray direction must be unit length");
  if (!(max_range > 0.0)) throw InvalidArgument("max_range must be positive");
}

Hit make_hit(const TriMesh& m, std::uint32_t tri, double t, const Vec3& origin, const Vec3& dir) {
  Hit h;
  h.distance = t;
  h.point = origin + t * dir;
  h.normal = m.triangle_normal(tri);
  if (h.normal.dot(dir) > 0.0) h.normal = -h.normal;
  h.triangle_id = tri;
  return h;
}

}  // namespace

Aabb Bvh::triangle_bounds(std::uint32_t t) const {
  Aabb b;
  for (auto v : mesh_->triangles[t]) b.expand(mesh_->vertices[v]);
  for (int a = 0; a < 3; ++a) {
    b.min[a] -= pad_for(b.min[a]);
    b.max[a] += pad_for(b.max[a]);
  }
  return b;
}

Bvh::Bvh(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh)) {
  if (!mesh_ || mesh_->empty()) throw InvalidArgument("cannot build a BVH over an empty mesh");
  mesh_->validate();
  std::vector<std::uint32_t> ids;
  ids.reserve(mesh_->triangles.size());
  for (std::uint32_t t = 0; t < mesh_->triangles.size(); ++t) {
    if (is_degenerate(*mesh_, t))
      ++degenerate_;
    else
      ids.push_back(t);
  }
  if (ids.empty()) throw InvalidArgument("mesh has no non-degenerate triangle");

  std::vector<Vec3> centroids(mesh_->triangles.size());
  for (auto t : ids) {
    const auto& tri = mesh_->triangles[t];
    centroids[t] = (mesh_->vertices[tri[0]] + mesh_->vertices[tri[1]] + mesh_->vertices[tri[2]]) / 3.0;
  }
  nodes_.reserve(2 * ids.size() / kLeafSize + 1);
  build(ids, centroids, 0, ids.size(), 0);
}

std::uint32_t Bvh::build(std::vector<std::uint32_t>& ids, std::vector<Vec3>& centroids,
                         std::size_t begin, std::size_t end, int depth) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb bounds, centroid_bounds;
  for (std::size_t i = begin; i < end; ++i) {
    bounds.expand(triangle_bounds(ids[i]));
    centroid_bounds.expand(centroids[ids[i]]);
  }

  if (end - begin <= kLeafSize) {
    std::sort(ids.begin() + static_cast<std::ptrdiff_t>(begin), ids.begin() + static_cast<std::ptrdiff_t>(end));
    auto packet = zero_packet();
    const auto packet_index = static_cast<std::uint32_t>(packets_.size());
    for (std::size_t i = begin; i < end; ++i) {
      fill_lane(packet, i - begin, *mesh_, ids[i]);
      order_.push_back(ids[i]);
    }
    for (std::size_t i = end - begin; i < kLeafSize; ++i) order_.push_back(kEmptySlot);
    packets_.push_back(packet);
    nodes_[index].bounds = bounds;
    nodes_[index].left = packet_index;
    nodes_[index].count = static_cast<std::uint32_t>(end - begin);
    return index;
  }

  int axis = 0;
  centroid_bounds.extent().maxCoeff(&axis);
  const std::size_t mid = begin + (end - begin) / 2;
  // Ties broken by id keep the build deterministic.
  std::nth_element(ids.begin() + static_cast<std::ptrdiff_t>(begin),
                   ids.begin() + static_cast<std::ptrdiff_t>(mid),
                   ids.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = centroids[a][axis], cb = centroids[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const std::uint32_t left = build(ids, centroids, begin, mid, depth + 1);
  const std::uint32_t right = build(ids, centroids, mid, end, depth + 1);
  nodes_[index].bounds = bounds;
  nodes_[index].left = left;
  nodes_[index].right = right;
  nodes_[index].count = 0;
  return index;
}

std::optional<Hit> Bvh::raycast(const Vec3& origin, const Vec3& dir, double max_range) const {
  check_ray(dir, max_range);
  const auto& kernels = simd::active();
  RayFrame frame{origin, Vec3::Zero(), {}};
  for (int a = 0; a < 3; ++a) {
    frame.parallel[a] = dir[a] == 0.0;
    frame.inv[a] = frame.parallel[a] ? 0.0 : 1.0 / dir[a];
  }
  const simd::Ray ray{origin.x(), origin.y(), origin.z(), dir.x(), dir.y(), dir.z()};

  double best_t = max_range;
  std::uint32_t best_id = kEmptySlot;
  std::uint32_t stack[128];
  int top = 0;
  if (slab_entry(nodes_[0].bounds, frame, best_t) <= best_t) stack[top++] = 0;
  alignas(32) double t_lane[simd::kPacketWidth];

  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (slab_entry(node.bounds, frame, best_t) > best_t) continue;
    if (node.is_leaf()) {
      kernels.intersect4(ray, packets_[node.left], kSelfHitEpsilon, best_t, t_lane);
      for (std::uint32_t lane = 0; lane < node.count; ++lane) {
        const double t = t_lane[lane];
        if (!(t <= best_t)) continue;
        const std::uint32_t id = order_[simd::kPacketWidth * node.left + lane];
        if (t < best_t || id < best_id) {
          best_t = t;
          best_id = id;
        }
      }
      continue;
    }
    const double tl = slab_entry(nodes_[node.left].bounds, frame, best_t);
    const double tr = slab_entry(nodes_[node.right].bounds, frame, best_t);
    // Push the farther child first so the nearer one is visited next.
    if (tl <= tr) {
      if (tr <= best_t) stack[top++] = node.right;
      if (tl <= best_t) stack[top++] = node.left;
    } else {
      if (tl <= best_t) stack[top++] = node.left;
      if (tr <= best_t) stack[top++] = node.right;
    }
  }
  if (best_id == kEmptySlot) return std::nullopt;
  return make_hit(*mesh_, best_id, best_t, origin, dir);
}

std::vector<std::uint32_t> Bvh::query(const Aabb& box) const {
  std::vector<std::uint32_t> out;
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (!node.bounds.overlaps(box)) continue;
    if (node.is_leaf()) {
      for (std::uint32_t lane = 0; lane < node.count; ++lane) {
        const std::uint32_t id = order_[simd::kPacketWidth * node.left + lane];
        if (triangle_bounds(id).overlaps(box)) out.push_back(id);
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Bvh build_bvh(const TriMesh& mesh) { return Bvh(std::make_shared<const TriMesh>(mesh)); }

std::optional<Hit> raycast_brute_force(const TriMesh& mesh, const Vec3& origin, const Vec3& dir,
                                       double max_range) {
  check_ray(dir, max_range);
  const simd::Ray ray{origin.x(), origin.y(), origin.z(), dir.x(), dir.y(), dir.z()};
  double best_t = max_range;
  std::uint32_t best_id = kEmptySlot;
  auto packet = zero_packet();
  double t_lane[simd::kPacketWidth];
  for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
    if (is_degenerate(mesh, t)) continue;
    fill_lane(packet, 0, mesh, t);
    simd::scalar::intersect4(ray, packet, kSelfHitEpsilon, best_t, t_lane);
    if (t_lane[0] < best_t || (t_lane[0] == best_t && best_id == kEmptySlot)) {
      best_t = t_lane[0];
      best_id = t;
    }
  }
  if (best_id == kEmptySlot) return std::nullopt;
  return make_hit(mesh, best_id, best_t, origin, dir);
}

}  // namespace lidarworld::geometry
