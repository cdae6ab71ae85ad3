// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidarworld/core/rng.hpp"
#include "lidarworld/world/layout.hpp"
#include "lidarworld/world/scene.hpp"
#include "lidarworld/world/trajectory.hpp"

namespace lidarworld::world {

struct SamplerParams {
  std::size_t steps = 10;  ///< timesteps per trajectory
  double dt = 0.1;         ///< seconds
  double axle_offset = 0.0;
  double heading_jitter = 0.2617993877991494;  ///< 15 degrees
  double z_top = 100.0;
  double v_max = 40.0;
  Footprint ego_footprint{};
  CollisionParams collision{};
};

/// A template placed in the world: world pose of the template origin.
struct Placement {
  std::size_t template_index = 0;
  Pose2 anchor;
  double gait_phase = 0.0;
};

/// Per-step poses of a placed template after ground snapping, or nullopt if
/// any step collides or leaves the mesh. `others[k]` are the world bounds
/// already occupied at step k (may be shorter than steps).
std::optional<std::vector<Pose>> place_track(const WorldScene& scene, const geometry::Aabb& local_bounds,
                                             const TrajectoryTemplate& tmpl, const Pose2& anchor,
                                             std::span<const std::vector<geometry::Aabb>> others,
                                             const SamplerParams& params);

/// Centers of the cells where lane markings or road lines are set. Layouts
/// without those class names use channels 0 and 1.
struct AnchorCells {
  std::vector<Vec2> centers;
  double cell_size = 0.0;
  double heading = 0.0;
};
AnchorCells anchor_cells(const SemanticLayout& layout);

/// Draws a placement: uniform template of the requested class (any class if
/// none match), anchor uniform over the anchor cells (over the xy extent of
/// `fallback_area` when there are none), heading = source heading + jitter.
Placement draw_placement(const TrajectoryBank& bank, ActorClass cls, const AnchorCells& anchors,
                         const geometry::Aabb& fallback_area, const SamplerParams& params, Rng& rng);

struct SamplingResult {
  Trajectory trajectory;
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  double acceptance_ratio() const {
    return attempts == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempts);
  }
};

/// Rejective sampling of one ego track plus one track for each of the first
/// n_actors scene actors. Attempt i draws from the substream (seed, i), so
/// results depend only on the inputs. A fixed ego track (one pose per step)
/// skips ego sampling. Throws ExhaustionError when max_attempts runs out.
SamplingResult sample_trajectories(const TrajectoryBank& bank, const WorldScene& scene,
                                   const SemanticLayout& layout, std::size_t n_actors,
                                   std::uint64_t seed, std::size_t max_attempts,
                                   const SamplerParams& params = {},
                                   const std::optional<std::vector<Pose>>& fixed_ego = std::nullopt);

/// Re-checks a sampled trajectory: every actor and the ego (using
/// params.ego_footprint) must be clean at every step against the static world
/// and all other boxes. Returns a description of the first violation, or an
/// empty string.
std::string verify_trajectory(const WorldScene& scene, const Trajectory& trajectory, const SamplerParams& params);

}  // namespace lidarworld::world
