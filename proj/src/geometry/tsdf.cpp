// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/geometry/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lidarworld/core/binary_io.hpp"
#include "lidarworld/core/error.hpp"

namespace lidarworld::geometry {

TsdfVolume::TsdfVolume(VolumeDims dims, float voxel_size, std::array<float, 3> origin, float fill)
    : dims_(dims), voxel_size_(voxel_size), origin_(origin) {
  if (dims.nx < 2 || dims.ny < 2 || dims.nz < 2)
    throw InvalidArgument("TSDF dims must be >= 2 on every axis");
  if (!(voxel_size > 0.0f) || !std::isfinite(voxel_size))
    throw InvalidArgument("TSDF voxel_size must be positive");
  values_.assign(dims.count(), fill);
}

Vec3 TsdfVolume::voxel_center(std::size_t x, std::size_t y, std::size_t z) const {
  const double h = voxel_size_;
  return {origin_[0] + h * static_cast<double>(x), origin_[1] + h * static_cast<double>(y),
          origin_[2] + h * static_cast<double>(z)};
}

void TsdfVolume::validate() const {
  if (dims_.nx < 2 || dims_.ny < 2 || dims_.nz < 2)
    throw InvalidArgument("TSDF dims must be >= 2 on every axis");
  if (!(voxel_size_ > 0.0f)) throw InvalidArgument("TSDF voxel_size must be positive");
  if (values_.size() != dims_.count()) throw InvalidArgument("TSDF value count mismatch");
  for (float v : values_)
    if (!(v >= -1.0f && v <= 1.0f)) throw InvalidArgument("TSDF value outside [-1, 1]");
}

double signed_distance(const AnalyticShape& shape, const Vec3& p) {
  struct Visitor {
    const Vec3& p;
    double operator()(const Sphere& s) const { return (p - s.center).norm() - s.radius; }
    double operator()(const Box& b) const {
      const Vec3 q = (p - b.center).cwiseAbs() - b.half_extents;
      const double outside = q.cwiseMax(0.0).norm();
      const double inside = std::min(q.maxCoeff(), 0.0);
      return outside + inside;
    }
    double operator()(const Plane& pl) const {
      return pl.normal.normalized().dot(p) - pl.offset;
    }
  };
  return std::visit(Visitor{p}, shape);
}

namespace {

void check_sdf_args(VolumeDims dims, double voxel_size, double trunc_dist) {
  if (!(voxel_size > 0.0)) throw InvalidArgument("voxel_size must be positive");
  if (!(trunc_dist > 0.0)) throw InvalidArgument("trunc_dist must be positive");
  if (dims.nx < 2 || dims.ny < 2 || dims.nz < 2)
    throw InvalidArgument("TSDF dims must be >= 2 on every axis");
}

float truncate(double d, double trunc_dist) {
  return static_cast<float>(std::clamp(-d / trunc_dist, -1.0, 1.0));
}

}  // namespace

TsdfVolume analytic_sdf(const AnalyticShape& shape, VolumeDims dims, double voxel_size,
                        const Vec3& origin, double trunc_dist) {
  return analytic_sdf_union(std::span(&shape, 1), dims, voxel_size, origin, trunc_dist);
}

TsdfVolume analytic_sdf_union(std::span<const AnalyticShape> shapes, VolumeDims dims,
                              double voxel_size, const Vec3& origin, double trunc_dist) {
  check_sdf_args(dims, voxel_size, trunc_dist);
  TsdfVolume vol(dims, static_cast<float>(voxel_size),
                 {static_cast<float>(origin.x()), static_cast<float>(origin.y()),
                  static_cast<float>(origin.z())},
                 -1.0f);
  for (std::size_t z = 0; z < dims.nz; ++z)
    for (std::size_t y = 0; y < dims.ny; ++y)
      for (std::size_t x = 0; x < dims.nx; ++x) {
        const Vec3 p = vol.voxel_center(x, y, z);
        float best = -1.0f;
        for (const auto& s : shapes) best = std::max(best, truncate(signed_distance(s, p), trunc_dist));
        vol.at(x, y, z) = best;
      }
  return vol;
}

void write_tsdf(std::ostream& os, const TsdfVolume& vol) {
  binio::write_magic(os, "TSDF");
  binio::write<std::uint32_t>(os, binio::kContainerVersion);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(vol.dims().nx));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(vol.dims().ny));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(vol.dims().nz));
  binio::write<float>(os, vol.voxel_size());
  for (float o : vol.origin()) binio::write<float>(os, o);
  binio::write_array(os, vol.values().data(), vol.values().size());
}

TsdfVolume read_tsdf(std::istream& is) {
  binio::expect_magic(is, "TSDF");
  binio::expect_version(is);
  VolumeDims dims;
  dims.nx = binio::read<std::uint32_t>(is);
  dims.ny = binio::read<std::uint32_t>(is);
  dims.nz = binio::read<std::uint32_t>(is);
  const float voxel = binio::read<float>(is);
  std::array<float, 3> origin{};
  for (float& o : origin) o = binio::read<float>(is);
  TsdfVolume vol;
  try {
    vol = TsdfVolume(dims, voxel, origin);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("TSDF header: ") + e.what());
  }
  binio::read_array(is, vol.values().data(), vol.values().size());
  try {
    vol.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("TSDF payload: ") + e.what());
  }
  return vol;
}

void save_tsdf(const std::filesystem::path& path, const TsdfVolume& vol) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tsdf(os, vol);
}

TsdfVolume load_tsdf(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  return read_tsdf(is);
}

}  // namespace lidarworld::geometry
