// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lidarworld/world/actor.hpp"
#include "lidarworld/world/layout.hpp"

namespace lidarworld::world {

struct ActorState {
  int actor_id = 0;
  Pose pose;
  std::vector<Mat3> joints;  ///< empty for rigid actors
};

/// One timestep: the ego pose and every actor's pose.
struct TimeStep {
  Pose ego;
  std::vector<ActorState> actors;
};

struct Trajectory {
  double dt = 0.1;
  std::vector<TimeStep> steps;

  /// Throws InvalidArgument when timesteps disagree on actor ids or the ego
  /// moves farther than v_max * dt between consecutive steps.
  void validate(double v_max = 40.0) const;
};

struct TrajectorySample {
  double t = 0.0, x = 0.0, y = 0.0, heading = 0.0;
};

/// Pose sequence in canonical form: starts at the origin heading +x.
/// `source_heading` keeps the heading the recording started with.
struct TrajectoryTemplate {
  ActorClass cls = ActorClass::kVehicle;
  double source_heading = 0.0;
  std::vector<TrajectorySample> samples;

  double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
  /// Linear interpolation (heading unwrapped); clamps outside the recording.
  Pose2 at(double t) const;
};

/// Re-expresses a recorded sequence relative to its first sample. Times are
/// shifted to start at zero. Throws InvalidArgument for < 2 samples or
/// non-increasing times.
TrajectoryTemplate canonicalize(ActorClass cls, std::vector<TrajectorySample> samples);

struct TrajectoryBank {
  std::vector<TrajectoryTemplate> templates;
};

// JSON: {"templates": [{"class": "vehicle", "samples": [[t, x, y, heading], ...]}]}
// Samples may be in any frame; they are canonicalized on load.
TrajectoryBank parse_trajectory_bank(std::string_view json);
TrajectoryBank load_trajectory_bank(const std::filesystem::path& path);
std::string dump_trajectory_bank(const TrajectoryBank& bank);

/// Straight constant-speed templates, handy for tests and generated data.
TrajectoryTemplate straight_template(ActorClass cls, double speed, double duration, double dt,
                                     double heading = 0.0);

}  // namespace lidarworld::world
