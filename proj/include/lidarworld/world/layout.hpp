// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lidarworld/core/pose.hpp"

namespace lidarworld::world {

/// Default semantic classes, in channel order.
inline const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names{"lane markings", "road lines", "edges", "crosswalks",
                                              "driveways"};
  return names;
}

/// Planar pose: position and heading (radians, counter-clockwise from +x).
struct Pose2 {
  double x = 0.0, y = 0.0, heading = 0.0;

  Vec2 apply(const Vec2& p) const;
  Pose2 compose(const Pose2& local) const;
};

struct Polyline {
  int class_id = 0;
  std::vector<Vec2> points;
};

/// Map elements as polylines tagged with a semantic class.
struct VectorMap {
  std::vector<std::string> class_names = default_class_names();
  std::vector<Polyline> polylines;

  void validate() const;
};

/// Rasterized multi-channel top-down map. Cell (x, y) has its center at
/// origin + R(heading) * (x, y) * resolution in world coordinates. Channels
/// are stored plane by plane, x fastest within a plane. Geometry fields are
/// single precision so the "LAYO" container is lossless.
struct SemanticLayout {
  std::size_t nx = 0, ny = 0;
  float resolution = 1.0f;
  std::array<float, 2> origin{0.0f, 0.0f};
  float heading = 0.0f;
  std::vector<std::string> class_names;
  std::vector<std::uint8_t> cells;

  SemanticLayout() = default;
  SemanticLayout(std::size_t nx, std::size_t ny, float resolution, std::vector<std::string> names);

  std::size_t channels() const { return class_names.size(); }
  std::size_t index(std::size_t c, std::size_t x, std::size_t y) const { return c * nx * ny + x + nx * y; }
  bool at(std::size_t c, std::size_t x, std::size_t y) const { return cells[index(c, x, y)] != 0; }
  void set(std::size_t c, std::size_t x, std::size_t y, bool v) { cells[index(c, x, y)] = v ? 1 : 0; }
  Vec2 cell_center(std::size_t x, std::size_t y) const;
  std::size_t count(std::size_t c) const;

  void validate() const;
  bool operator==(const SemanticLayout&) const = default;
};

/// Rasterizes around `center`: the layout is aligned with center.heading and
/// its middle cell sits at the center position. A cell of channel c is set iff
/// some class-c segment passes within resolution / 2 of the cell center.
SemanticLayout rasterize_map(const VectorMap& map, const Pose2& center, std::size_t nx, std::size_t ny,
                             double resolution);

// JSON: {"classes": [...], "polylines": [{"class": "<name>" | index, "points": [[x, y], ...]}]}
VectorMap parse_vector_map(std::string_view json);
VectorMap load_vector_map(const std::filesystem::path& path);
std::string dump_vector_map(const VectorMap& map);

// "LAYO" container: magic, u32 version, u32 nx, u32 ny, u32 channels,
// f32 resolution, f32 origin x, f32 origin y, f32 heading, then one u8
// plane of nx*ny cells per channel.
void write_layout(std::ostream& os, const SemanticLayout& layout);
SemanticLayout read_layout(std::istream& is);
void save_layout(const std::filesystem::path& path, const SemanticLayout& layout);
SemanticLayout load_layout(const std::filesystem::path& path);

}  // namespace lidarworld::world
