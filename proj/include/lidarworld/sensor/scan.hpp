// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lidarworld/sensor/lidar.hpp"
#include "lidarworld/world/compose.hpp"

namespace lidarworld::sensor {

struct Scan {
  RangeImage image;
  PointCloud cloud;  ///< ego frame, with pixel indices and actor labels
};

/// Ray casts every pixel against the composed scene, keeping the nearest hit
/// with range in [min_range, max_range]. Rays run in parallel; the output
/// does not depend on `threads`.
Scan simulate_scan(const world::ComposedScene& scene, const LidarConfig& cfg, const Pose& ego, int threads = 1);

/// Sensor-frame position of an ego-frame point; the range image depth of a
/// point is the norm of this position.
Vec3 ego_to_sensor(const Vec3& p, const LidarConfig& cfg);

struct Projection {
  RangeImage image;
  std::size_t dropped = 0;  ///< points outside the field of view or range limits
};

/// Bins points by nearest beam elevation and azimuth bin; the smaller depth
/// wins on collisions. Ego- and world-frame clouds are moved into the sensor
/// frame first (world frame uses `ego`).
Projection project_to_range_image(const PointCloud& pc, const LidarConfig& cfg, const Pose& ego = Pose::identity());

/// World-frame points along each valid pixel's bin-center direction.
PointCloud unproject(const RangeImage& r, const LidarConfig& cfg, const Pose& ego);

}  // namespace lidarworld::sensor
