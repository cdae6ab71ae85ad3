// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/geometry/marching_cubes.hpp"

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <vector>

namespace lidarworld::geometry {
namespace mc {
namespace {

constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
// Cube faces, corners counter-clockwise as seen from outside the cube.
constexpr int kFaceCorners[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                    {3, 7, 6, 2}, {0, 4, 7, 3}, {1, 2, 6, 5}};

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e)
    if ((kEdgeCorners[e][0] == a && kEdgeCorners[e][1] == b) ||
        (kEdgeCorners[e][0] == b && kEdgeCorners[e][1] == a))
      return e;
  return -1;
}

// Walks each face counter-clockwise. A crossing from an inside to an
// outside corner is an exit; the surface segment on that face runs from each
// exit to the entry that opened the same inside arc. Inside corners that sit
// diagonally on a face therefore stay separated, and since the rule only
// looks at the face's own corners, neighbouring cubes agree on shared faces.
// The segments chain into closed loops around the inside region; emitting
// them reversed makes triangle normals face the outside.
std::array<int, 16> triangulate(int config) {
  std::array<int, 12> next;
  next.fill(-1);
  for (const auto& face : kFaceCorners) {
    struct Crossing {
      int edge;
      bool exit;
    };
    std::vector<Crossing> crossings;
    for (int k = 0; k < 4; ++k) {
      const int a = face[k], b = face[(k + 1) % 4];
      const bool ia = (config >> a) & 1, ib = (config >> b) & 1;
      if (ia != ib) crossings.push_back({edge_between(a, b), ia});
    }
    const int n = static_cast<int>(crossings.size());
    for (int i = 0; i < n; ++i) {
      if (!crossings[i].exit) continue;
      const Crossing& entry = crossings[(i - 1 + n) % n];
      assert(!entry.exit);
      next[crossings[i].edge] = entry.edge;
    }
  }

  std::array<int, 16> out;
  out.fill(-1);
  int cursor = 0;
  std::array<bool, 12> used{};
  for (int start = 0; start < 12; ++start) {
    if (next[start] < 0 || used[start]) continue;
    std::vector<int> loop;
    for (int e = start; !used[e]; e = next[e]) {
      used[e] = true;
      loop.push_back(e);
    }
    std::reverse(loop.begin(), loop.end());
    for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
      assert(cursor + 3 < 16);
      out[cursor++] = loop[0];
      out[cursor++] = loop[i];
      out[cursor++] = loop[i + 1];
    }
  }
  return out;
}

}  // namespace

const std::array<std::array<int, 16>, 256>& triangle_table() {
  static const auto table = [] {
    std::array<std::array<int, 16>, 256> t{};
    for (int c = 0; c < 256; ++c) t[c] = triangulate(c);
    return t;
  }();
  return table;
}

}  // namespace mc

TriMesh extract_mesh(const TsdfVolume& vol, float iso) {
  const auto& table = mc::triangle_table();
  const VolumeDims d = vol.dims();
  const std::size_t n = d.count();
  // Welded vertex id per (voxel, axis) edge.
  std::vector<std::int64_t> edge_vertex(3 * n, -1);
  TriMesh mesh;

  const auto values = vol.values().data();
  const double h = vol.voxel_size();
  const Vec3 origin(vol.origin()[0], vol.origin()[1], vol.origin()[2]);

  auto vertex_on_edge = [&](std::size_t x, std::size_t y, std::size_t z, int edge) {
    const int* ca = mc::kCornerOffset[mc::kEdgeCorners[edge][0]];
    const int* cb = mc::kCornerOffset[mc::kEdgeCorners[edge][1]];
    // Canonical owner: the lower corner of the edge plus its axis.
    const int axis = ca[0] != cb[0] ? 0 : (ca[1] != cb[1] ? 1 : 2);
    const int* lo = (ca[axis] < cb[axis]) ? ca : cb;
    const int* hi = (ca[axis] < cb[axis]) ? cb : ca;
    const std::size_t lx = x + lo[0], ly = y + lo[1], lz = z + lo[2];
    const std::size_t key = 3 * vol.index(lx, ly, lz) + axis;
    if (edge_vertex[key] >= 0) return static_cast<std::uint32_t>(edge_vertex[key]);

    const double va = values[vol.index(lx, ly, lz)];
    const double vb = values[vol.index(x + hi[0], y + hi[1], z + hi[2])];
    const double t = (static_cast<double>(iso) - va) / (vb - va);
    Vec3 grid(static_cast<double>(lx), static_cast<double>(ly), static_cast<double>(lz));
    grid[axis] += t;
    const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(origin + h * grid);
    edge_vertex[key] = id;
    return id;
  };

  for (std::size_t z = 0; z + 1 < d.nz; ++z)
    for (std::size_t y = 0; y + 1 < d.ny; ++y)
      for (std::size_t x = 0; x + 1 < d.nx; ++x) {
        int config = 0;
        for (int c = 0; c < 8; ++c) {
          const int* o = mc::kCornerOffset[c];
          if (values[vol.index(x + o[0], y + o[1], z + o[2])] > iso) config |= 1 << c;
        }
        if (config == 0 || config == 255) continue;
        const auto& tris = table[config];
        for (int i = 0; tris[i] >= 0; i += 3)
          mesh.triangles.push_back({vertex_on_edge(x, y, z, tris[i]),
                                    vertex_on_edge(x, y, z, tris[i + 1]),
                                    vertex_on_edge(x, y, z, tris[i + 2])});
      }
  return mesh;
}

}  // namespace lidarworld::geometry
