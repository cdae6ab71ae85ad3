// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lidarworld/core/pose.hpp"

namespace lidarworld::sensor {

/// Spinning LiDAR geometry. Beam b looks along elevation elevations[b]
/// (radians, strictly decreasing); azimuth bin a is centered on
/// azimuth_start + a * (azimuth_end - azimuth_start) / azimuth_count.
struct LidarConfig {
  std::vector<double> elevations;
  std::size_t azimuth_count = 1024;
  double azimuth_start = 0.0;
  double azimuth_end = 6.283185307179586;
  double min_range = 0.5;
  double max_range = 120.0;
  Pose sensor_offset = Pose::from_translation({0.0, 0.0, 1.8});  ///< sensor relative to ego

  /// B beams evenly spaced from fov_top down to fov_bottom (radians).
  static LidarConfig uniform(std::size_t beams, double fov_top, double fov_bottom, std::size_t azimuth_count);

  std::size_t beams() const { return elevations.size(); }
  std::size_t pixels() const { return beams() * azimuth_count; }
  double azimuth_step() const { return (azimuth_end - azimuth_start) / static_cast<double>(azimuth_count); }
  double azimuth(std::size_t a) const { return azimuth_start + static_cast<double>(a) * azimuth_step(); }
  bool full_circle() const;
  /// Unit direction of pixel (b, a) in the sensor frame.
  Vec3 direction(std::size_t b, std::size_t a) const;

  void validate() const;
};

// JSON: {"elevations_deg": [...]} or {"uniform": {"beams": 64, "fov_top_deg": 2.0,
// "fov_bottom_deg": -24.8}}, plus optional "azimuth_count", "azimuth_start_deg",
// "azimuth_end_deg", "min_range", "max_range" and
// "sensor_offset": {"translation": [x, y, z], "rpy_deg": [roll, pitch, yaw]}.
LidarConfig parse_lidar_config(std::string_view json);
LidarConfig load_lidar_config(const std::filesystem::path& path);
std::string dump_lidar_config(const LidarConfig& cfg);

struct LidarRay {
  Vec3 origin;
  Vec3 dir;
  std::uint32_t beam;
  std::uint32_t azimuth;
};

/// One ray per pixel in beam-major order, in the world frame of ego * sensor_offset.
std::vector<LidarRay> generate_rays(const LidarConfig& cfg, const Pose& ego);

/// B x A depth grid, beam-major. depth 0 marks pixels without a return.
struct RangeImage {
  std::size_t beams = 0, azimuths = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> mask;
  std::shared_ptr<const LidarConfig> config;  ///< may be null for images read from disk

  RangeImage() = default;
  RangeImage(std::size_t beams, std::size_t azimuths, std::shared_ptr<const LidarConfig> config = nullptr);

  std::size_t index(std::size_t b, std::size_t a) const { return b * azimuths + a; }
  bool valid(std::size_t b, std::size_t a) const { return mask[index(b, a)] != 0; }
  std::size_t valid_count() const;
  /// Throws InvalidArgument unless depth > 0 on valid pixels, depth = 0
  /// elsewhere and depth <= max_range when a config is attached.
  void validate() const;
  /// Depth and mask equality (the config is not compared).
  bool same_pixels(const RangeImage& o) const;
};

// "RIMG" container: magic, u32 version, u32 B, u32 A, f32 depth[B*A], u8 mask[B*A].
// Depths are stored in single precision; a round trip returns the
// float-rounded image and re-writing it reproduces the same bytes.
void write_range_image(std::ostream& os, const RangeImage& r);
RangeImage read_range_image(std::istream& is);
void save_range_image(const std::filesystem::path& path, const RangeImage& r);
RangeImage load_range_image(const std::filesystem::path& path);

enum class Frame { kSensor, kEgo, kWorld };

/// Points with optional per-point beam/azimuth indices and actor labels
/// (each array is empty or has one entry per point).
struct PointCloud {
  Frame frame = Frame::kEgo;
  std::vector<Vec3> points;
  std::vector<std::uint16_t> beam;
  std::vector<std::uint16_t> azimuth;
  std::vector<std::int32_t> label;

  std::size_t size() const { return points.size(); }
  bool has_pixels() const { return !beam.empty(); }
  bool has_labels() const { return !label.empty(); }
  void validate() const;
  /// Points mapped through `pose`, tagged with `frame`.
  PointCloud transformed(const Pose& pose, Frame frame) const;
  /// Keeps points i with keep[i] != 0, preserving order.
  PointCloud subset(const std::vector<std::uint8_t>& keep) const;
};

// PLY: binary little-endian, float x/y/z, then uchar beam and ushort azimuth
// when present, then ushort label when present. Coordinates are stored in
// single precision.
void write_ply(std::ostream& os, const PointCloud& pc);
PointCloud read_ply(std::istream& is);
void save_ply(const std::filesystem::path& path, const PointCloud& pc);
PointCloud load_ply(const std::filesystem::path& path);

/// ASCII "x y z" per line.
void write_xyz(std::ostream& os, const PointCloud& pc);
PointCloud read_xyz(std::istream& is);

/// Loads by extension: .ply or .xyz.
PointCloud load_point_cloud(const std::filesystem::path& path);

}  // namespace lidarworld::sensor
