// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/sensor/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "lidarworld/core/binary_io.hpp"
#include "lidarworld/core/error.hpp"

namespace lidarworld::sensor {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

LidarConfig LidarConfig::uniform(std::size_t beams, double fov_top, double fov_bottom, std::size_t azimuth_count) {
  if (beams < 1) throw InvalidArgument("lidar needs at least one beam");
  if (beams > 1 && !(fov_top > fov_bottom)) throw InvalidArgument("fov_top must exceed fov_bottom");
  LidarConfig cfg;
  cfg.azimuth_count = azimuth_count;
  for (std::size_t b = 0; b < beams; ++b) {
    const double u = beams > 1 ? static_cast<double>(b) / static_cast<double>(beams - 1) : 0.0;
    cfg.elevations.push_back(b + 1 == beams && beams > 1 ? fov_bottom : fov_top + u * (fov_bottom - fov_top));
  }
  cfg.validate();
  return cfg;
}

bool LidarConfig::full_circle() const {
  return std::abs(azimuth_end - azimuth_start - 2.0 * std::numbers::pi) < 1e-12;
}

Vec3 LidarConfig::direction(std::size_t b, std::size_t a) const {
  const double e = elevations[b], t = azimuth(a);
  return {std::cos(e) * std::cos(t), std::cos(e) * std::sin(t), std::sin(e)};
}

void LidarConfig::validate() const {
  if (elevations.empty()) throw InvalidArgument("lidar needs at least one beam");
  if (elevations.size() > 256) throw InvalidArgument("lidar supports at most 256 beams");
  for (std::size_t b = 0; b < elevations.size(); ++b) {
    if (!std::isfinite(elevations[b]) || std::abs(elevations[b]) > std::numbers::pi / 2)
      throw InvalidArgument("beam elevation out of range");
    if (b > 0 && !(elevations[b] < elevations[b - 1])) throw InvalidArgument("beam elevations must strictly decrease");
  }
  if (azimuth_count < 1 || azimuth_count > 65536) throw InvalidArgument("azimuth count must be in [1, 65536]");
  if (!(azimuth_end > azimuth_start) || azimuth_end - azimuth_start > 2.0 * std::numbers::pi + 1e-12)
    throw InvalidArgument("azimuth range must be non-empty and at most one revolution");
  if (!(min_range > 0.0) || !(max_range > min_range) || !std::isfinite(max_range))
    throw InvalidArgument("lidar needs 0 < min_range < max_range");
  sensor_offset.validate(1e-9);
}

LidarConfig parse_lidar_config(std::string_view text) {
  LidarConfig cfg;
  try {
    const auto doc = nlohmann::json::parse(text);
    cfg.azimuth_count = doc.value("azimuth_count", cfg.azimuth_count);
    if (doc.contains("elevations_deg")) {
      cfg.elevations.clear();
      for (const double e : doc.at("elevations_deg").get<std::vector<double>>()) cfg.elevations.push_back(e * kDeg);
    } else {
      const auto u = doc.value("uniform", nlohmann::json::object());
      const auto preset = LidarConfig::uniform(u.value("beams", std::size_t{64}), u.value("fov_top_deg", 2.0) * kDeg,
                                               u.value("fov_bottom_deg", -24.8) * kDeg, cfg.azimuth_count);
      cfg.elevations = preset.elevations;
    }
    cfg.azimuth_start = doc.value("azimuth_start_deg", 0.0) * kDeg;
    cfg.azimuth_end = doc.contains("azimuth_end_deg") ? doc.at("azimuth_end_deg").get<double>() * kDeg
                                                      : cfg.azimuth_start + 2.0 * std::numbers::pi;
    cfg.min_range = doc.value("min_range", cfg.min_range);
    cfg.max_range = doc.value("max_range", cfg.max_range);
    if (doc.contains("sensor_offset")) {
      const auto& o = doc.at("sensor_offset");
      const auto t = o.value("translation", std::vector<double>{0.0, 0.0, 1.8});
      const auto rpy = o.value("rpy_deg", std::vector<double>{0.0, 0.0, 0.0});
      if (t.size() != 3 || rpy.size() != 3) throw FormatError("sensor_offset needs 3-vectors");
      cfg.sensor_offset = Pose::from_rpy(rpy[0] * kDeg, rpy[1] * kDeg, rpy[2] * kDeg, {t[0], t[1], t[2]});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("lidar config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

LidarConfig load_lidar_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_lidar_config(text);
}

std::string dump_lidar_config(const LidarConfig& cfg) {
  nlohmann::json doc;
  std::vector<double> deg;
  for (const double e : cfg.elevations) deg.push_back(e / kDeg);
  doc["elevations_deg"] = deg;
  doc["azimuth_count"] = cfg.azimuth_count;
  doc["azimuth_start_deg"] = cfg.azimuth_start / kDeg;
  doc["azimuth_end_deg"] = cfg.azimuth_end / kDeg;
  doc["min_range"] = cfg.min_range;
  doc["max_range"] = cfg.max_range;
  const Mat3& r = cfg.sensor_offset.rotation;
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  const Vec3& t = cfg.sensor_offset.translation;
  doc["sensor_offset"] = {{"translation", {t.x(), t.y(), t.z()}}, {"rpy_deg", {roll / kDeg, pitch / kDeg, yaw / kDeg}}};
  return doc.dump(2);
}

std::vector<LidarRay> generate_rays(const LidarConfig& cfg, const Pose& ego) {
  cfg.validate();
  const Pose sensor = ego * cfg.sensor_offset;
  std::vector<LidarRay> rays;
  rays.reserve(cfg.pixels());
  for (std::size_t b = 0; b < cfg.beams(); ++b)
    for (std::size_t a = 0; a < cfg.azimuth_count; ++a)
      rays.push_back({sensor.translation, sensor.rotate(cfg.direction(b, a)), static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(a)});
  return rays;
}

RangeImage::RangeImage(std::size_t b, std::size_t a, std::shared_ptr<const LidarConfig> cfg)
    : beams(b), azimuths(a), depth(b * a, 0.0), mask(b * a, 0), config(std::move(cfg)) {
  if (b == 0 || a == 0) throw InvalidArgument("range image dims must be positive");
  if (config && (config->beams() != b || config->azimuth_count != a))
    throw InvalidArgument("range image dims differ from its config");
}

std::size_t RangeImage::valid_count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

void RangeImage::validate() const {
  if (depth.size() != beams * azimuths || mask.size() != depth.size()) throw InvalidArgument("range image size mismatch");
  if (config && (config->beams() != beams || config->azimuth_count != azimuths))
    throw InvalidArgument("range image dims differ from its config");
  const double max_range = config ? config->max_range : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (mask[i] > 1) throw InvalidArgument("range image mask must be 0 or 1");
    if (mask[i]) {
      if (!(depth[i] > 0.0) || !(depth[i] <= max_range)) throw InvalidArgument("valid pixel depth out of range");
    } else if (depth[i] != 0.0) {
      throw InvalidArgument("invalid pixel with non-zero depth");
    }
  }
}

bool RangeImage::same_pixels(const RangeImage& o) const {
  return beams == o.beams && azimuths == o.azimuths && depth == o.depth && mask == o.mask;
}

void write_range_image(std::ostream& os, const RangeImage& r) {
  r.validate();
  binio::write_magic(os, "RIMG");
  binio::write<std::uint32_t>(os, binio::kContainerVersion);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(r.beams));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(r.azimuths));
  std::vector<float> d(r.depth.begin(), r.depth.end());
  binio::write_array(os, d.data(), d.size());
  binio::write_array(os, r.mask.data(), r.mask.size());
  if (!os) throw FormatError("range image write failed");
}

RangeImage read_range_image(std::istream& is) {
  binio::expect_magic(is, "RIMG");
  binio::expect_version(is);
  const auto b = binio::read<std::uint32_t>(is);
  const auto a = binio::read<std::uint32_t>(is);
  if (b == 0 || a == 0 || static_cast<std::uint64_t>(b) * a > (std::uint64_t{1} << 30))
    throw FormatError("range image dims out of range");
  RangeImage r(b, a);
  std::vector<float> d(r.depth.size());
  binio::read_array(is, d.data(), d.size());
  binio::read_array(is, r.mask.data(), r.mask.size());
  std::copy(d.begin(), d.end(), r.depth.begin());
  try {
    r.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("range image: ") + e.what());
  }
  return r;
}

void save_range_image(const std::filesystem::path& path, const RangeImage& r) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string());
  write_range_image(os, r);
}

RangeImage load_range_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_range_image(is);
}

void PointCloud::validate() const {
  for (const auto& p : points)
    if (!all_finite(p)) throw InvalidArgument("point cloud holds non-finite coordinates");
  if (!beam.empty() && beam.size() != points.size()) throw InvalidArgument("beam index count mismatch");
  if (azimuth.size() != beam.size()) throw InvalidArgument("beam and azimuth indices must come together");
  if (!label.empty() && label.size() != points.size()) throw InvalidArgument("label count mismatch");
}

PointCloud PointCloud::transformed(const Pose& pose, Frame f) const {
  PointCloud out = *this;
  out.frame = f;
  for (auto& p : out.points) p = pose.apply(p);
  return out;
}

PointCloud PointCloud::subset(const std::vector<std::uint8_t>& keep) const {
  if (keep.size() != points.size()) throw InvalidArgument("keep mask size mismatch");
  PointCloud out;
  out.frame = frame;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!keep[i]) continue;
    out.points.push_back(points[i]);
    if (has_pixels()) {
      out.beam.push_back(beam[i]);
      out.azimuth.push_back(azimuth[i]);
    }
    if (has_labels()) out.label.push_back(label[i]);
  }
  return out;
}

namespace {

std::string_view frame_name(Frame f) {
  switch (f) {
    case Frame::kSensor: return "sensor";
    case Frame::kEgo: return "ego";
    case Frame::kWorld: return "world";
  }
  return "ego";
}

struct PlyProperty {
  std::string name;
  std::string type;
};

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  throw FormatError("unsupported PLY property type '" + t + "'");
}

double ply_read_value(std::istream& is, const std::string& t) {
  if (t == "char" || t == "int8") return binio::read<std::int8_t>(is);
  if (t == "uchar" || t == "uint8") return binio::read<std::uint8_t>(is);
  if (t == "short" || t == "int16") return binio::read<std::int16_t>(is);
  if (t == "ushort" || t == "uint16") return binio::read<std::uint16_t>(is);
  if (t == "int" || t == "int32") return binio::read<std::int32_t>(is);
  if (t == "uint" || t == "uint32") return binio::read<std::uint32_t>(is);
  if (t == "float" || t == "float32") return binio::read<float>(is);
  return binio::read<double>(is);
}

}  // namespace

void write_ply(std::ostream& os, const PointCloud& pc) {
  pc.validate();
  for (const auto b : pc.beam)
    if (b > 255) throw InvalidArgument("PLY beam index exceeds 255");
  for (const auto l : pc.label)
    if (l < 0 || l > 65535) throw InvalidArgument("PLY label out of u16 range");
  os << "ply\nformat binary_little_endian 1.0\ncomment frame " << frame_name(pc.frame) << "\nelement vertex "
     << pc.size() << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (pc.has_pixels()) os << "property uchar beam\nproperty ushort azimuth\n";
  if (pc.has_labels()) os << "property ushort label\n";
  os << "end_header\n";
  for (std::size_t i = 0; i < pc.size(); ++i) {
    for (int k = 0; k < 3; ++k) binio::write<float>(os, static_cast<float>(pc.points[i][k]));
    if (pc.has_pixels()) {
      binio::write<std::uint8_t>(os, static_cast<std::uint8_t>(pc.beam[i]));
      binio::write<std::uint16_t>(os, pc.azimuth[i]);
    }
    if (pc.has_labels()) binio::write<std::uint16_t>(os, static_cast<std::uint16_t>(pc.label[i]));
  }
  if (!os) throw FormatError("PLY write failed");
}

PointCloud read_ply(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "ply") throw FormatError("not a PLY file");
  PointCloud pc;
  std::size_t count = 0;
  bool in_vertex = false, binary = false;
  std::vector<PlyProperty> props;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      binary = fmt == "binary_little_endian";
    } else if (key == "comment") {
      std::string what, value;
      ls >> what >> value;
      if (what == "frame") pc.frame = value == "sensor" ? Frame::kSensor : value == "world" ? Frame::kWorld : Frame::kEgo;
    } else if (key == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (key == "property" && in_vertex) {
      PlyProperty p;
      ls >> p.type >> p.name;
      if (p.type == "list") throw FormatError("PLY list properties are not supported on vertices");
      ply_type_size(p.type);
      props.push_back(p);
    }
  }
  if (!is) throw FormatError("PLY header truncated");
  if (!binary) throw FormatError("only binary_little_endian PLY is supported");
  auto has = [&](const char* n) {
    return std::any_of(props.begin(), props.end(), [&](const PlyProperty& p) { return p.name == n; });
  };
  if (!has("x") || !has("y") || !has("z")) throw FormatError("PLY vertices need x, y and z");
  const bool pixels = has("beam") && has("azimuth");
  const bool labels = has("label");
  if (count > (std::size_t{1} << 31)) throw FormatError("PLY vertex count too large");
  pc.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec3 p = Vec3::Zero();
    double beam = 0, az = 0, label = 0;
    for (const auto& prop : props) {
      const double v = ply_read_value(is, prop.type);
      if (prop.name == "x") p.x() = v;
      else if (prop.name == "y") p.y() = v;
      else if (prop.name == "z") p.z() = v;
      else if (prop.name == "beam") beam = v;
      else if (prop.name == "azimuth") az = v;
      else if (prop.name == "label") label = v;
    }
    pc.points.push_back(p);
    if (pixels) {
      pc.beam.push_back(static_cast<std::uint16_t>(beam));
      pc.azimuth.push_back(static_cast<std::uint16_t>(az));
    }
    if (labels) pc.label.push_back(static_cast<std::int32_t>(label));
  }
  try {
    pc.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("PLY: ") + e.what());
  }
  return pc;
}

void save_ply(const std::filesystem::path& path, const PointCloud& pc) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string());
  write_ply(os, pc);
}

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_ply(is);
}

void write_xyz(std::ostream& os, const PointCloud& pc) {
  pc.validate();
  os << std::setprecision(17);
  for (const auto& p : pc.points) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  if (!os) throw FormatError("XYZ write failed");
}

PointCloud read_xyz(std::istream& is) {
  PointCloud pc;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) throw FormatError("XYZ line " + std::to_string(n) + " malformed");
    pc.points.push_back(p);
  }
  try {
    pc.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("XYZ: ") + e.what());
  }
  return pc;
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return load_ply(path);
  if (ext == ".xyz") {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    return read_xyz(is);
  }
  throw InvalidArgument("unknown point cloud extension '" + ext + "'");
}

}  // namespace lidarworld::sensor
