// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lidarworld/diffusion/sampling.hpp"
#include "lidarworld/geometry/tsdf.hpp"
#include "lidarworld/sensor/lidar.hpp"
#include "lidarworld/sensor/raydrop.hpp"
#include "lidarworld/world/actor.hpp"
#include "lidarworld/world/layout.hpp"

namespace lidarworld::pipeline {

using Json = nlohmann::ordered_json;

/// Where the static scene comes from: a TSDF file, an OBJ mesh, or a
/// diffusion sample decoded by the identity codec.
struct StaticSceneSpec {
  enum class Kind { kTsdf, kMesh, kDiffusion };
  Kind kind = Kind::kTsdf;
  std::filesystem::path path;  ///< TSDF, OBJ, or Gaussian model JSON

  // Diffusion sampling only.
  double guidance = 0.0;
  std::optional<long> condition;
  diffusion::Sampler sampler = diffusion::Sampler::kEuler;
  std::size_t steps_per_level = 20;
  double sigma_max = 80.0, sigma_min = 0.01, eta = 1.0;
  std::size_t levels = 100;
  geometry::VolumeDims dims;  ///< latent (nz, ny, nx) must match the model dimension
  float voxel_size = 0.5f;
  std::array<float, 3> origin{0.0f, 0.0f, 0.0f};
};

struct LayoutSpec {
  std::optional<std::filesystem::path> map;     ///< VectorMap JSON to rasterize
  std::optional<std::filesystem::path> layout;  ///< ready-made LAYO file
  world::Pose2 center;
  std::size_t nx = 200, ny = 200;
  double resolution = 0.5;
};

struct ActorSpec {
  world::ActorClass cls = world::ActorClass::kVehicle;
  std::optional<std::filesystem::path> asset;  ///< OBJ, relative to the asset directory
  world::Footprint footprint;
};

struct RaydropSpec {
  sensor::RaydropMode mode = sensor::RaydropMode::kNone;
  double temperature = 0.5;
  double a = 4.0, b = 0.05, c = 2.0;
};

/// Straight ego drive: start pose, constant speed along the start heading.
struct EgoSpec {
  world::Pose2 start;
  double speed = 5.0;
};

struct PipelineConfig {
  StaticSceneSpec static_scene;
  LayoutSpec layout;
  std::filesystem::path asset_dir;
  std::vector<ActorSpec> actors;
  std::optional<std::filesystem::path> trajectory_bank;
  sensor::LidarConfig lidar;
  RaydropSpec raydrop;
  std::optional<EgoSpec> ego;
  std::size_t frames = 10;
  double dt = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_attempts = 1000;
  double axle_offset = 0.0;
  bool accumulate = false;

  /// The parsed document with paths made absolute. Re-parsing it reproduces
  /// this config bit for bit, so manifests store it verbatim. Empty for
  /// configs built in code.
  Json source;

  /// T >= 1, dt > 0, referenced files exist, sensor config valid.
  void validate() const;
};

/// Parses a pipeline config; relative paths resolve against base_dir. A
/// manifest written by run_pipeline is accepted too (its "config" member is
/// used).
PipelineConfig parse_pipeline_config(std::string_view json, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// `source` when present, otherwise every field rendered to JSON (angles in
/// degrees, so a re-parse may differ in the last bit).
Json pipeline_config_json(const PipelineConfig& cfg);

/// Single-frame scan: a static scene (TSDF, OBJ, or an exact square plane),
/// the sensor, the ego pose and optional raydrop.
struct ScanConfig {
  enum class Scene { kTsdf, kMesh, kPlane };
  Scene scene = Scene::kPlane;
  std::filesystem::path path;
  double plane_height = 0.0;
  double plane_half_extent = 100.0;
  sensor::LidarConfig lidar;
  Pose ego;
  RaydropSpec raydrop;
  std::uint64_t seed = 0;
};

ScanConfig parse_scan_config(std::string_view json, const std::filesystem::path& base_dir = {});
ScanConfig load_scan_config(const std::filesystem::path& path);

// Shared JSON helpers.
Pose pose_from_json(const Json& j);        ///< {"translation": [..], "rpy_deg": [..]}
Json pose_to_json(const Pose& p);          ///< {"translation": [..], "rotation": [[..], ..]}
world::Pose2 pose2_from_json(const Json& j);  ///< [x, y, heading_deg]
Json pose2_to_json(const world::Pose2& p);
sensor::LidarConfig lidar_from_json(const Json& j, const std::filesystem::path& base_dir);
RaydropSpec raydrop_from_json(const Json& j);
Json raydrop_to_json(const RaydropSpec& r);

/// Reads a whole file; throws FormatError when it cannot be opened.
std::string read_text(const std::filesystem::path& path);
/// Parses JSON, mapping syntax errors to FormatError.
Json parse_json(std::string_view text, std::string_view what);
std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base_dir);

}  // namespace lidarworld::pipeline
