// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lidarworld/geometry/mesh.hpp"
#include "lidarworld/geometry/tsdf.hpp"

namespace lidarworld::geometry {

/// Iso-surface of the volume at `iso` using classic per-cube marching cubes
/// with linear edge interpolation. Vertices on shared cube edges are welded.
/// Triangles wind so their normals point toward decreasing values (outside).
/// Returns an empty mesh when no cube straddles the iso level.
TriMesh extract_mesh(const TsdfVolume& vol, float iso = 0.0f);

namespace mc {
/// Triangulation for a cube configuration: up to 5 triangles as corner-edge
/// indices, terminated by -1. Corner bit i set means corner i is inside
/// (value > iso). Corner and edge numbering follow the common Lorensen/Bourke
/// convention.
const std::array<std::array<int, 16>, 256>& triangle_table();
}  // namespace mc

}  // namespace lidarworld::geometry
