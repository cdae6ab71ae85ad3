// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "lidarworld/geometry/tsdf.hpp"
#include "lidarworld/pipeline/config.hpp"
#include "lidarworld/world/layout.hpp"
#include "lidarworld/world/trajectory.hpp"

// Analytic scenes and matching configs for demos and tests. The street runs
// along x: road for |y| < 9, building blocks on both sides from |y| = 11.

namespace lidarworld::pipeline::testdata {

/// Horizontal ground at z = height over [-half, half]^2.
geometry::TsdfVolume plane_volume(double height = 0.0, double voxel = 0.2, double half = 40.0);

/// Ground plus building blocks.
std::vector<geometry::AnalyticShape> street_shapes(double length = 80.0);
geometry::TsdfVolume street_volume(double voxel = 0.4, double length = 80.0);

/// Lane markings at y = +-1.75, road lines at y = 0, edges at y = +-9.
world::VectorMap street_map(double length = 80.0);

/// Straight templates along +x and -x: vehicles at 4, 6 and 8 m/s,
/// pedestrians at 1.2 m/s.
world::TrajectoryBank street_bank(double duration = 1.0, double dt = 0.1);

/// 32 beams from +2 to -24.8 degrees, 1024 azimuth bins, sensor 1.8 m up.
Json lidar_json();

/// Dim-8 Gaussian with variance 1, unconditional mean 0, condition 1 mean 2.
Json cfg_demo_model_json();

/// Gaussian over identity-codec latents of a small volume: unconditional mean
/// is bare ground, condition 1 is the street. The latent dims are returned
/// through `dims` ((nx, ny, nz), origin and voxel for the codec).
Json scene_model_json(double variance, geometry::VolumeDims& dims, float& voxel, std::array<float, 3>& origin);

Json gaussian_model_json(const std::vector<double>& unconditional_mean, double variance,
                         const std::vector<std::pair<long, std::vector<double>>>& conditions);

}  // namespace lidarworld::pipeline::testdata
