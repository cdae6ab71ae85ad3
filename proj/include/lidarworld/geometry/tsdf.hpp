// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "lidarworld/core/pose.hpp"

namespace lidarworld::geometry {

struct VolumeDims {
  std::size_t nx = 0, ny = 0, nz = 0;
  std::size_t count() const { return nx * ny * nz; }
  bool operator==(const VolumeDims&) const = default;
};

/// Truncated signed distance field on a regular grid. Values lie in [-1, 1]
/// with negative outside the surface and positive inside; the zero level set
/// is the surface. Storage is x-fastest: index = x + nx * (y + ny * z).
/// Geometry fields are single precision so the on-disk form is lossless.
class TsdfVolume {
 public:
  TsdfVolume() = default;
  /// Every voxel starts at `fill`. Throws InvalidArgument on dims < 2 or voxel_size <= 0.
  TsdfVolume(VolumeDims dims, float voxel_size, std::array<float, 3> origin, float fill = -1.0f);

  const VolumeDims& dims() const { return dims_; }
  float voxel_size() const { return voxel_size_; }
  const std::array<float, 3>& origin() const { return origin_; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_.nx * (y + dims_.ny * z);
  }
  float at(std::size_t x, std::size_t y, std::size_t z) const { return values_[index(x, y, z)]; }
  float& at(std::size_t x, std::size_t y, std::size_t z) { return values_[index(x, y, z)]; }

  /// World position of a voxel center.
  Vec3 voxel_center(std::size_t x, std::size_t y, std::size_t z) const;

  std::vector<float>& values() { return values_; }
  const std::vector<float>& values() const { return values_; }

  /// Throws InvalidArgument if any invariant is broken.
  void validate() const;

  bool operator==(const TsdfVolume&) const = default;

 private:
  VolumeDims dims_;
  float voxel_size_ = 1.0f;
  std::array<float, 3> origin_{0.0f, 0.0f, 0.0f};
  std::vector<float> values_;
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};
struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
};
/// Half-space boundary {p : normal . p = offset}; the side the normal points to is outside.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};
using AnalyticShape = std::variant<Sphere, Box, Plane>;

/// Conventional signed distance: positive outside, negative inside.
double signed_distance(const AnalyticShape& shape, const Vec3& p);

/// Samples clamp(-d / trunc_dist, -1, 1) at each voxel center.
TsdfVolume analytic_sdf(const AnalyticShape& shape, VolumeDims dims, double voxel_size,
                        const Vec3& origin, double trunc_dist);

/// Union of shapes: the voxel takes the maximum (most-inside) value.
TsdfVolume analytic_sdf_union(std::span<const AnalyticShape> shapes, VolumeDims dims,
                              double voxel_size, const Vec3& origin, double trunc_dist);

/// Default truncation band in voxels.
inline constexpr double kDefaultTruncVoxels = 3.0;

// "TSDF" container: magic, u32 version, u32 nx, ny, nz, f32 voxel_size,
// 3 x f32 origin, then nx*ny*nz f32 values.
void write_tsdf(std::ostream& os, const TsdfVolume& vol);
TsdfVolume read_tsdf(std::istream& is);
void save_tsdf(const std::filesystem::path& path, const TsdfVolume& vol);
TsdfVolume load_tsdf(const std::filesystem::path& path);

}  // namespace lidarworld::geometry
