// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/sensor/scan.hpp"

#include <cmath>
#include <numbers>

#include "lidarworld/core/error.hpp"
#include "lidarworld/core/parallel.hpp"

namespace lidarworld::sensor {

namespace {

struct RayResult {
  bool hit = false;
  Vec3 ego_point = Vec3::Zero();
  double depth = 0.0;
  std::int32_t label = 0;
};

// Nearest beam by elevation; the lower index wins ties. Returns -1 outside
// the half-spacing margins of the outer beams.
long nearest_beam(const LidarConfig& cfg, double elevation) {
  const auto& e = cfg.elevations;
  const std::size_t n = e.size();
  if (n > 1) {
    if (elevation > e[0] + 0.5 * (e[0] - e[1])) return -1;
    if (elevation < e[n - 1] - 0.5 * (e[n - 2] - e[n - 1])) return -1;
  }
  long best = 0;
  double best_d = std::abs(elevation - e[0]);
  for (std::size_t b = 1; b < n; ++b) {
    const double d = std::abs(elevation - e[b]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<long>(b);
    }
  }
  return best;
}

long azimuth_bin(const LidarConfig& cfg, double theta) {
  const double step = cfg.azimuth_step();
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double d = theta - cfg.azimuth_start;
  d -= kTwoPi * std::floor((d + 0.5 * step) / kTwoPi);
  const auto a = static_cast<long>(std::floor(d / step + 0.5));
  if (a < 0) return -1;
  if (static_cast<std::size_t>(a) >= cfg.azimuth_count) return cfg.full_circle() ? 0 : -1;
  return a;
}

}  // namespace

Vec3 ego_to_sensor(const Vec3& p, const LidarConfig& cfg) {
  return cfg.sensor_offset.rotation.transpose() * (p - cfg.sensor_offset.translation);
}

Scan simulate_scan(const world::ComposedScene& scene, const LidarConfig& cfg, const Pose& ego, int threads) {
  cfg.validate();
  const auto rays = generate_rays(cfg, ego);
  const Pose ego_inv = ego.inverse();
  std::vector<RayResult> results(rays.size());
  if (!scene.empty()) {
    parallel_for(rays.size(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto& ray = rays[i];
        const auto hit = scene.raycast(ray.origin + cfg.min_range * ray.dir, ray.dir, cfg.max_range - cfg.min_range);
        if (!hit) continue;
        RayResult& r = results[i];
        r.ego_point = ego_inv.apply(hit->point);
        r.depth = ego_to_sensor(r.ego_point, cfg).norm();
        if (!(r.depth >= cfg.min_range && r.depth <= cfg.max_range)) continue;
        r.hit = true;
        r.label = scene.label_of(hit->triangle_id);
      }
    });
  }

  Scan scan{RangeImage(cfg.beams(), cfg.azimuth_count, std::make_shared<const LidarConfig>(cfg)), {}};
  scan.cloud.frame = Frame::kEgo;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const RayResult& r = results[i];
    if (!r.hit) continue;
    scan.image.depth[i] = r.depth;
    scan.image.mask[i] = 1;
    scan.cloud.points.push_back(r.ego_point);
    scan.cloud.beam.push_back(static_cast<std::uint16_t>(rays[i].beam));
    scan.cloud.azimuth.push_back(static_cast<std::uint16_t>(rays[i].azimuth));
    scan.cloud.label.push_back(r.label);
  }
  return scan;
}

Projection project_to_range_image(const PointCloud& pc, const LidarConfig& cfg, const Pose& ego) {
  cfg.validate();
  pc.validate();
  Projection out{RangeImage(cfg.beams(), cfg.azimuth_count, std::make_shared<const LidarConfig>(cfg)), 0};
  const Pose world_to_ego = ego.inverse();
  for (const auto& p : pc.points) {
    Vec3 s = p;
    if (pc.frame == Frame::kEgo) s = ego_to_sensor(p, cfg);
    if (pc.frame == Frame::kWorld) s = ego_to_sensor(world_to_ego.apply(p), cfg);
    const double depth = s.norm();
    const long b = nearest_beam(cfg, std::atan2(s.z(), std::hypot(s.x(), s.y())));
    const long a = azimuth_bin(cfg, std::atan2(s.y(), s.x()));
    if (!(depth >= cfg.min_range && depth <= cfg.max_range) || b < 0 || a < 0) {
      ++out.dropped;
      continue;
    }
    const std::size_t i = out.image.index(static_cast<std::size_t>(b), static_cast<std::size_t>(a));
    if (!out.image.mask[i] || depth < out.image.depth[i]) {
      out.image.depth[i] = depth;
      out.image.mask[i] = 1;
    }
  }
  return out;
}

PointCloud unproject(const RangeImage& r, const LidarConfig& cfg, const Pose& ego) {
  cfg.validate();
  r.validate();
  if (r.beams != cfg.beams() || r.azimuths != cfg.azimuth_count) throw InvalidArgument("range image does not match config");
  const Pose sensor = ego * cfg.sensor_offset;
  PointCloud pc;
  pc.frame = Frame::kWorld;
  for (std::size_t b = 0; b < r.beams; ++b)
    for (std::size_t a = 0; a < r.azimuths; ++a) {
      if (!r.valid(b, a)) continue;
      pc.points.push_back(sensor.apply(cfg.direction(b, a) * r.depth[r.index(b, a)]));
      pc.beam.push_back(static_cast<std::uint16_t>(b));
      pc.azimuth.push_back(static_cast<std::uint16_t>(a));
    }
  return pc;
}

}  // namespace lidarworld::sensor
