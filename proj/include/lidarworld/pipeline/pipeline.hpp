// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lidarworld/pipeline/config.hpp"
#include "lidarworld/sensor/scan.hpp"
#include "lidarworld/world/scene.hpp"
#include "lidarworld/world/trajectory.hpp"

namespace lidarworld::pipeline {

/// A stage failure, tagged with where it happened. `validation()` is true
/// when the cause was bad input (InvalidArgument or FormatError).
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, std::optional<std::size_t> frame, const std::string& cause, bool validation);

  const std::string& stage() const noexcept { return stage_; }
  const std::optional<std::size_t>& frame() const noexcept { return frame_; }
  bool validation() const noexcept { return validation_; }

 private:
  std::string stage_;
  std::optional<std::size_t> frame_;
  bool validation_;
};

struct FrameOutput {
  std::size_t index = 0;
  double time = 0.0;
  Pose ego;
  sensor::Scan scan;  ///< after raydrop; cloud in the ego frame
};

struct PipelineResult {
  std::vector<FrameOutput> frames;
  world::Trajectory trajectory;
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  std::size_t static_triangles = 0;
  Json manifest;
};

/// Decodes a diffusion sample into a TSDF volume (one chain, seeded by seed).
geometry::TsdfVolume sample_static_volume(const StaticSceneSpec& spec, std::uint64_t seed, int threads = 1);

/// Actors with ids 1..n: OBJ assets rescaled to their footprint, or
/// procedural bodies when no asset is given.
std::vector<world::Actor> build_actors(const std::vector<ActorSpec>& specs);

/// Constant-speed straight track, z snapped to the ground (0 off-mesh) plus
/// the axle offset.
std::vector<Pose> straight_ego_track(const world::WorldScene& scene, const EgoSpec& ego, std::size_t frames,
                                     double dt, double axle_offset);

/// Static scene, actors, trajectories, then per frame compose, scan and
/// raydrop. With a non-empty out_dir writes frame_NNNN.{ply,rimg},
/// frame_NNNN_pose.json, optionally accumulated.ply, and manifest.json. A
/// ".partial" marker exists while running and is kept, holding the failing
/// stage, if a stage throws. Output bytes do not depend on `threads`.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir = {}, int threads = 1);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace lidarworld::pipeline
