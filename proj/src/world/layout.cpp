// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/world/layout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include "json.hpp"

#include "lidarworld/core/binary_io.hpp"
#include "lidarworld/core/error.hpp"

namespace lidarworld::world {

Vec2 Pose2::apply(const Vec2& p) const {
  const double c = std::cos(heading), s = std::sin(heading);
  return {x + c * p.x() - s * p.y(), y + s * p.x() + c * p.y()};
}

Pose2 Pose2::compose(const Pose2& local) const {
  const Vec2 p = apply({local.x, local.y});
  return {p.x(), p.y(), heading + local.heading};
}

void VectorMap::validate() const {
  if (class_names.empty()) throw InvalidArgument("vector map needs at least one class");
  for (const auto& pl : polylines) {
    if (pl.points.size() < 2) throw InvalidArgument("polyline needs at least two points");
    if (pl.class_id < 0 || static_cast<std::size_t>(pl.class_id) >= class_names.size())
      throw InvalidArgument("polyline class out of range");
    for (const auto& p : pl.points)
      if (!std::isfinite(p.x()) || !std::isfinite(p.y())) throw InvalidArgument("non-finite polyline point");
  }
}

SemanticLayout::SemanticLayout(std::size_t nx_, std::size_t ny_, float resolution_, std::vector<std::string> names)
    : nx(nx_), ny(ny_), resolution(resolution_), class_names(std::move(names)) {
  if (nx == 0 || ny == 0) throw InvalidArgument("layout dims must be at least 1x1");
  if (!(resolution > 0.0f) || !std::isfinite(resolution)) throw InvalidArgument("layout resolution must be positive");
  if (class_names.empty()) throw InvalidArgument("layout needs at least one channel");
  cells.assign(nx * ny * class_names.size(), 0);
}

Vec2 SemanticLayout::cell_center(std::size_t x, std::size_t y) const {
  const double r = resolution;
  return Pose2{origin[0], origin[1], heading}.apply({static_cast<double>(x) * r, static_cast<double>(y) * r});
}

std::size_t SemanticLayout::count(std::size_t c) const {
  const auto first = cells.begin() + static_cast<std::ptrdiff_t>(c * nx * ny);
  return static_cast<std::size_t>(std::count_if(first, first + static_cast<std::ptrdiff_t>(nx * ny),
                                                [](std::uint8_t v) { return v != 0; }));
}

void SemanticLayout::validate() const {
  if (nx == 0 || ny == 0 || class_names.empty()) throw InvalidArgument("empty layout");
  if (cells.size() != nx * ny * class_names.size()) throw InvalidArgument("layout cell count mismatch");
  if (std::any_of(cells.begin(), cells.end(), [](std::uint8_t v) { return v > 1; }))
    throw InvalidArgument("layout cells must be 0 or 1");
}

namespace {

double segment_distance_sq(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).squaredNorm();
}

}  // namespace

SemanticLayout rasterize_map(const VectorMap& map, const Pose2& center, std::size_t nx, std::size_t ny,
                             double resolution) {
  map.validate();
  SemanticLayout out(nx, ny, static_cast<float>(resolution), map.class_names);
  out.heading = static_cast<float>(center.heading);
  const double half_x = 0.5 * static_cast<double>(nx - 1) * resolution;
  const double half_y = 0.5 * static_cast<double>(ny - 1) * resolution;
  const Vec2 o = Pose2{center.x, center.y, center.heading}.apply({-half_x, -half_y});
  out.origin = {static_cast<float>(o.x()), static_cast<float>(o.y())};

  // Work in the layout frame, in cell units, where cell (i, j) sits at (i, j).
  const double c = std::cos(center.heading), s = std::sin(center.heading);
  auto to_cells = [&](const Vec2& p) {
    const double dx = p.x() - center.x, dy = p.y() - center.y;
    return Vec2{(c * dx + s * dy + half_x) / resolution, (-s * dx + c * dy + half_y) / resolution};
  };
  constexpr double kRadius = 0.5;
  const double max_i = static_cast<double>(nx - 1), max_j = static_cast<double>(ny - 1);
  for (const auto& pl : map.polylines) {
    const auto ch = static_cast<std::size_t>(pl.class_id);
    for (std::size_t k = 0; k + 1 < pl.points.size(); ++k) {
      const Vec2 a = to_cells(pl.points[k]);
      const Vec2 b = to_cells(pl.points[k + 1]);
      const double lo_i = std::max(0.0, std::floor(std::min(a.x(), b.x()) - kRadius));
      const double hi_i = std::min(max_i, std::ceil(std::max(a.x(), b.x()) + kRadius));
      const double lo_j = std::max(0.0, std::floor(std::min(a.y(), b.y()) - kRadius));
      const double hi_j = std::min(max_j, std::ceil(std::max(a.y(), b.y()) + kRadius));
      for (double j = lo_j; j <= hi_j; ++j)
        for (double i = lo_i; i <= hi_i; ++i)
          if (segment_distance_sq({i, j}, a, b) <= kRadius * kRadius)
            out.set(ch, static_cast<std::size_t>(i), static_cast<std::size_t>(j), true);
    }
  }
  return out;
}

VectorMap parse_vector_map(std::string_view text) {
  VectorMap map;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    if (doc.contains("classes")) map.class_names = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& item : doc.value("polylines", nlohmann::json::array())) {
      Polyline pl;
      const auto& cls = item.at("class");
      if (cls.is_number_integer()) {
        pl.class_id = cls.get<int>();
      } else {
        const auto name = cls.get<std::string>();
        const auto it = std::find(map.class_names.begin(), map.class_names.end(), name);
        if (it == map.class_names.end()) throw InvalidArgument("unknown polyline class '" + name + "'");
        pl.class_id = static_cast<int>(it - map.class_names.begin());
      }
      for (const auto& p : item.at("points")) {
        if (p.size() != 2) throw FormatError("polyline point must be [x, y]");
        pl.points.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
      map.polylines.push_back(std::move(pl));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("vector map: ") + e.what());
  }
  map.validate();
  return map;
}

VectorMap load_vector_map(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_vector_map(text);
}

std::string dump_vector_map(const VectorMap& map) {
  nlohmann::json doc;
  doc["classes"] = map.class_names;
  auto& arr = doc["polylines"] = nlohmann::json::array();
  for (const auto& pl : map.polylines) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : pl.points) pts.push_back({p.x(), p.y()});
    arr.push_back({{"class", map.class_names.at(static_cast<std::size_t>(pl.class_id))}, {"points", pts}});
  }
  return doc.dump(2);
}

void write_layout(std::ostream& os, const SemanticLayout& layout) {
  layout.validate();
  binio::write_magic(os, "LAYO");
  binio::write<std::uint32_t>(os, binio::kContainerVersion);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(layout.nx));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(layout.ny));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(layout.channels()));
  binio::write<float>(os, layout.resolution);
  binio::write<float>(os, layout.origin[0]);
  binio::write<float>(os, layout.origin[1]);
  binio::write<float>(os, layout.heading);
  binio::write_array(os, layout.cells.data(), layout.cells.size());
  if (!os) throw FormatError("layout write failed");
}

SemanticLayout read_layout(std::istream& is) {
  binio::expect_magic(is, "LAYO");
  binio::expect_version(is);
  const auto nx = binio::read<std::uint32_t>(is);
  const auto ny = binio::read<std::uint32_t>(is);
  const auto m = binio::read<std::uint32_t>(is);
  if (nx == 0 || ny == 0 || m == 0) throw FormatError("layout dims must be positive");
  if (static_cast<std::uint64_t>(nx) * ny * m > (std::uint64_t{1} << 34)) throw FormatError("layout too large");
  const float res = binio::read<float>(is);
  std::vector<std::string> names;
  if (m == default_class_names().size()) {
    names = default_class_names();
  } else {
    for (std::uint32_t c = 0; c < m; ++c) names.push_back("class " + std::to_string(c));
  }
  SemanticLayout out;
  try {
    out = SemanticLayout(nx, ny, res, std::move(names));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("layout: ") + e.what());
  }
  out.origin[0] = binio::read<float>(is);
  out.origin[1] = binio::read<float>(is);
  out.heading = binio::read<float>(is);
  binio::read_array(is, out.cells.data(), out.cells.size());
  try {
    out.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("layout: ") + e.what());
  }
  return out;
}

void save_layout(const std::filesystem::path& path, const SemanticLayout& layout) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string());
  write_layout(os, layout);
}

SemanticLayout load_layout(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_layout(is);
}

}  // namespace lidarworld::world
