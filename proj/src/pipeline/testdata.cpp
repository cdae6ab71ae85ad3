// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/pipeline/testdata.hpp"

#include <cmath>
#include <numbers>

#include "lidarworld/diffusion/codec.hpp"

namespace lidarworld::pipeline::testdata {

using geometry::AnalyticShape;
using geometry::Box;
using geometry::Plane;

geometry::TsdfVolume plane_volume(double height, double voxel, double half) {
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * half / voxel)) + 1;
  const Vec3 origin(-half, -half, height - 3.5 * voxel);
  return geometry::analytic_sdf(Plane{Vec3::UnitZ(), height}, {n, n, 8}, voxel, origin,
                                geometry::kDefaultTruncVoxels * voxel);
}

std::vector<AnalyticShape> street_shapes(double length) {
  std::vector<AnalyticShape> shapes{Plane{Vec3::UnitZ(), 0.0}};
  const double half = 0.5 * length;
  const double block = 12.0, gap = 4.0;
  int k = 0;
  for (double x0 = -half + 2.0; x0 + block <= half - 2.0; x0 += block + gap, ++k) {
    const double h = 4.0 + 1.5 * (k % 3);
    shapes.push_back(Box{{x0 + 0.5 * block, 15.0, 0.5 * h}, {0.5 * block, 4.0, 0.5 * h}});
    const double h2 = 5.0 + 1.0 * ((k + 1) % 3);
    shapes.push_back(Box{{x0 + 0.5 * block + 4.0, -15.0, 0.5 * h2}, {0.5 * block - 2.0, 4.0, 0.5 * h2}});
  }
  return shapes;
}

geometry::TsdfVolume street_volume(double voxel, double length) {
  const double half = 0.5 * length, side = 20.0, top = 8.0, bottom = -1.2;
  const auto nx = static_cast<std::size_t>(std::ceil(length / voxel)) + 1;
  const auto ny = static_cast<std::size_t>(std::ceil(2.0 * side / voxel)) + 1;
  const auto nz = static_cast<std::size_t>(std::ceil((top - bottom) / voxel)) + 1;
  const auto shapes = street_shapes(length);
  return geometry::analytic_sdf_union(shapes, {nx, ny, nz}, voxel, {-half, -side, bottom},
                                      geometry::kDefaultTruncVoxels * voxel);
}

world::VectorMap street_map(double length) {
  world::VectorMap m;
  const double h = 0.5 * length - 2.0;
  auto line = [&](int cls, double y) { m.polylines.push_back({cls, {Vec2(-h, y), Vec2(h, y)}}); };
  line(0, 1.75);
  line(0, -1.75);
  line(1, 0.0);
  line(2, 9.0);
  line(2, -9.0);
  m.polylines.push_back({3, {Vec2(10.0, -9.0), Vec2(10.0, 9.0)}});
  return m;
}

world::TrajectoryBank street_bank(double duration, double dt) {
  world::TrajectoryBank bank;
  for (const double heading : {0.0, std::numbers::pi}) {
    for (const double v : {4.0, 6.0, 8.0})
      bank.templates.push_back(world::straight_template(world::ActorClass::kVehicle, v, duration, dt, heading));
    bank.templates.push_back(world::straight_template(world::ActorClass::kPedestrian, 1.2, duration, dt, heading));
  }
  return bank;
}

Json lidar_json() {
  return {{"uniform", {{"beams", 32}, {"fov_top_deg", 2.0}, {"fov_bottom_deg", -24.8}}},
          {"azimuth_count", 1024},
          {"min_range", 0.5},
          {"max_range", 80.0},
          {"sensor_offset", {{"translation", {0.0, 0.0, 1.8}}, {"rpy_deg", {0.0, 0.0, 0.0}}}}};
}

Json gaussian_model_json(const std::vector<double>& unconditional_mean, double variance,
                         const std::vector<std::pair<long, std::vector<double>>>& conditions) {
  Json doc = {{"variance", variance}, {"unconditional_mean", unconditional_mean}, {"conditions", Json::array()}};
  for (const auto& [id, mean] : conditions) doc["conditions"].push_back({{"id", id}, {"mean", mean}});
  return doc;
}

Json cfg_demo_model_json() {
  return gaussian_model_json(std::vector<double>(8, 0.0), 1.0, {{1, std::vector<double>(8, 2.0)}});
}

Json scene_model_json(double variance, geometry::VolumeDims& dims, float& voxel, std::array<float, 3>& origin) {
  voxel = 0.5f;
  dims = {81, 49, 15};
  origin = {-20.0f, -12.0f, -1.25f};
  const Vec3 o(origin[0], origin[1], origin[2]);
  const double trunc = geometry::kDefaultTruncVoxels * voxel;
  const auto ground = geometry::analytic_sdf(Plane{Vec3::UnitZ(), 0.0}, dims, voxel, o, trunc);
  const auto shapes = street_shapes(40.0);
  const auto street = geometry::analytic_sdf_union(shapes, dims, voxel, o, trunc);
  const diffusion::IdentityCodec codec(voxel, origin);
  return gaussian_model_json(codec.encode(ground).values, variance, {{1, codec.encode(street).values}});
}

}  // namespace lidarworld::pipeline::testdata
