// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/pipeline/config.hpp"

#include <fstream>
#include <numbers>
#include <set>

#include "lidarworld/core/error.hpp"

namespace lidarworld::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void check_keys(const Json& obj, const std::set<std::string>& allowed, std::string_view where) {
  if (!obj.is_object()) throw InvalidArgument(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key)) throw InvalidArgument(std::string(where) + ": unknown key \"" + key + "\"");
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

// Resolves obj[key] in place and returns the absolute path.
fs::path take_path(Json& obj, const char* key, const fs::path& base_dir) {
  const fs::path p = resolve(obj.at(key).get<std::string>(), base_dir);
  obj[key] = path_string(p);
  return p;
}

std::string_view to_string(StaticSceneSpec::Kind k) {
  switch (k) {
    case StaticSceneSpec::Kind::kTsdf: return "tsdf";
    case StaticSceneSpec::Kind::kMesh: return "mesh";
    case StaticSceneSpec::Kind::kDiffusion: return "diffusion";
  }
  return "tsdf";
}

void require_file(const fs::path& p, std::string_view what) {
  if (p.empty() || !fs::is_regular_file(p)) throw InvalidArgument(std::string(what) + " not found: " + p.string());
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

fs::path resolve(const fs::path& p, const fs::path& base_dir) {
  if (p.empty()) return p;
  const fs::path joined = p.is_absolute() ? p : (base_dir.empty() ? fs::current_path() : fs::absolute(base_dir)) / p;
  return joined.lexically_normal();
}

Pose pose_from_json(const Json& j) {
  check_keys(j, {"translation", "rpy_deg"}, "pose");
  const auto t = j.value("translation", std::vector<double>{0.0, 0.0, 0.0});
  const auto r = j.value("rpy_deg", std::vector<double>{0.0, 0.0, 0.0});
  if (t.size() != 3 || r.size() != 3) throw InvalidArgument("pose: translation and rpy_deg need 3 values");
  return Pose::from_rpy(r[0] * kDeg, r[1] * kDeg, r[2] * kDeg, {t[0], t[1], t[2]});
}

Json pose_to_json(const Pose& p) {
  Json rot = Json::array();
  for (int i = 0; i < 3; ++i) rot.push_back({p.rotation(i, 0), p.rotation(i, 1), p.rotation(i, 2)});
  return {{"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}, {"rotation", rot}};
}

world::Pose2 pose2_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw InvalidArgument("planar pose needs [x, y, heading_deg]");
  return {v[0], v[1], v[2] * kDeg};
}

Json pose2_to_json(const world::Pose2& p) { return {p.x, p.y, p.heading / kDeg}; }

sensor::LidarConfig lidar_from_json(const Json& j, const fs::path& base_dir) {
  if (j.is_string()) return sensor::load_lidar_config(resolve(j.get<std::string>(), base_dir));
  return sensor::parse_lidar_config(j.dump());
}

RaydropSpec raydrop_from_json(const Json& j) {
  check_keys(j, {"mode", "temperature", "a", "b", "c"}, "raydrop");
  RaydropSpec r;
  r.mode = sensor::parse_raydrop_mode(j.value("mode", std::string("none")));
  r.temperature = j.value("temperature", r.temperature);
  r.a = j.value("a", r.a);
  r.b = j.value("b", r.b);
  r.c = j.value("c", r.c);
  if (r.mode == sensor::RaydropMode::kGumbel && !(r.temperature > 0.0))
    throw InvalidArgument("raydrop: temperature must be > 0");
  return r;
}

Json raydrop_to_json(const RaydropSpec& r) {
  return {{"mode", std::string(sensor::to_string(r.mode))},
          {"temperature", r.temperature},
          {"a", r.a},
          {"b", r.b},
          {"c", r.c}};
}

PipelineConfig parse_pipeline_config(std::string_view text, const fs::path& base_dir) {
  Json doc = parse_json(text, "pipeline config");
  if (doc.is_object() && doc.contains("config") && doc.contains("frames") && doc.contains("format"))
    doc = Json(doc.at("config"));
  PipelineConfig cfg;
  try {
    check_keys(doc, {"static_scene", "layout", "asset_dir", "actors", "trajectory_bank", "lidar", "raydrop", "ego",
                     "frames", "dt", "seed", "max_attempts", "axle_offset", "accumulate"},
               "pipeline config");
    if (!doc.contains("static_scene")) throw InvalidArgument("pipeline config: static_scene is required");
    if (!doc.contains("lidar")) throw InvalidArgument("pipeline config: lidar is required");

    auto& st = doc.at("static_scene");
    check_keys(st, {"tsdf", "mesh", "diffusion"}, "static_scene");
    if (st.size() != 1) throw InvalidArgument("static_scene needs exactly one of tsdf, mesh, diffusion");
    auto& s = cfg.static_scene;
    if (st.contains("tsdf")) {
      s.kind = StaticSceneSpec::Kind::kTsdf;
      s.path = take_path(st, "tsdf", base_dir);
    } else if (st.contains("mesh")) {
      s.kind = StaticSceneSpec::Kind::kMesh;
      s.path = take_path(st, "mesh", base_dir);
    } else {
      auto& d = st.at("diffusion");
      check_keys(d, {"model", "guidance", "condition", "sampler", "steps_per_level", "schedule", "dims", "voxel_size",
                     "origin"},
                 "static_scene.diffusion");
      s.kind = StaticSceneSpec::Kind::kDiffusion;
      s.path = take_path(d, "model", base_dir);
      s.guidance = d.value("guidance", 0.0);
      if (d.contains("condition")) s.condition = d.at("condition").get<long>();
      const auto sampler = d.value("sampler", std::string("euler"));
      if (sampler == "euler") s.sampler = diffusion::Sampler::kEuler;
      else if (sampler == "langevin") s.sampler = diffusion::Sampler::kLangevin;
      else throw InvalidArgument("static_scene.diffusion.sampler must be euler or langevin");
      s.steps_per_level = d.value("steps_per_level", s.steps_per_level);
      if (d.contains("schedule")) {
        const auto& sc = d.at("schedule");
        check_keys(sc, {"sigma_max", "sigma_min", "levels", "eta"}, "schedule");
        s.sigma_max = sc.value("sigma_max", s.sigma_max);
        s.sigma_min = sc.value("sigma_min", s.sigma_min);
        s.levels = sc.value("levels", s.levels);
        s.eta = sc.value("eta", s.eta);
      }
      const auto dims = d.at("dims").get<std::vector<std::size_t>>();
      if (dims.size() != 3) throw InvalidArgument("static_scene.diffusion.dims needs [nx, ny, nz]");
      s.dims = {dims[0], dims[1], dims[2]};
      s.voxel_size = d.at("voxel_size").get<float>();
      const auto o = d.value("origin", std::vector<float>{0.0f, 0.0f, 0.0f});
      if (o.size() != 3) throw InvalidArgument("static_scene.diffusion.origin needs 3 values");
      s.origin = {o[0], o[1], o[2]};
    }

    if (doc.contains("layout")) {
      auto& l = doc.at("layout");
      check_keys(l, {"map", "file", "center", "dims", "resolution"}, "layout");
      if (l.contains("map")) cfg.layout.map = take_path(l, "map", base_dir);
      if (l.contains("file")) cfg.layout.layout = take_path(l, "file", base_dir);
      if (cfg.layout.map && cfg.layout.layout) throw InvalidArgument("layout: give either map or file");
      if (l.contains("center")) cfg.layout.center = pose2_from_json(l.at("center"));
      if (l.contains("dims")) {
        const auto d = l.at("dims").get<std::vector<std::size_t>>();
        if (d.size() != 2) throw InvalidArgument("layout.dims needs [nx, ny]");
        cfg.layout.nx = d[0];
        cfg.layout.ny = d[1];
      }
      cfg.layout.resolution = l.value("resolution", cfg.layout.resolution);
    }

    cfg.asset_dir = doc.contains("asset_dir") ? take_path(doc, "asset_dir", base_dir) : resolve(".", base_dir);
    doc["asset_dir"] = path_string(cfg.asset_dir);
    if (doc.contains("actors")) {
      for (const auto& a : doc.at("actors")) {
        check_keys(a, {"class", "asset", "footprint"}, "actor");
        ActorSpec spec;
        spec.cls = world::parse_actor_class(a.value("class", std::string("vehicle")));
        if (spec.cls == world::ActorClass::kPedestrian) spec.footprint = {0.5, 0.6, 1.75};
        if (a.contains("asset")) spec.asset = resolve(a.at("asset").get<std::string>(), cfg.asset_dir);
        if (a.contains("footprint")) {
          const auto f = a.at("footprint").get<std::vector<double>>();
          if (f.size() != 3) throw InvalidArgument("actor footprint needs [length, width, height]");
          spec.footprint = {f[0], f[1], f[2]};
        }
        cfg.actors.push_back(spec);
      }
    }
    if (doc.contains("trajectory_bank")) cfg.trajectory_bank = take_path(doc, "trajectory_bank", base_dir);
    if (doc.at("lidar").is_string()) take_path(doc, "lidar", base_dir);
    cfg.lidar = lidar_from_json(doc.at("lidar"), base_dir);
    if (doc.contains("raydrop")) cfg.raydrop = raydrop_from_json(doc.at("raydrop"));
    if (doc.contains("ego")) {
      const auto& e = doc.at("ego");
      check_keys(e, {"start", "speed"}, "ego");
      EgoSpec ego;
      if (e.contains("start")) ego.start = pose2_from_json(e.at("start"));
      ego.speed = e.value("speed", ego.speed);
      cfg.ego = ego;
    }
    cfg.frames = doc.value("frames", cfg.frames);
    cfg.dt = doc.value("dt", cfg.dt);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.max_attempts = doc.value("max_attempts", cfg.max_attempts);
    cfg.axle_offset = doc.value("axle_offset", cfg.axle_offset);
    cfg.accumulate = doc.value("accumulate", cfg.accumulate);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pipeline config: ") + e.what());
  }
  cfg.source = doc;
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  return parse_pipeline_config(read_text(path), fs::absolute(path).parent_path());
}

Json pipeline_config_json(const PipelineConfig& cfg) {
  if (!cfg.source.is_null()) return cfg.source;
  Json doc;
  const auto& s = cfg.static_scene;
  if (s.kind == StaticSceneSpec::Kind::kDiffusion) {
    Json d = {{"model", path_string(s.path)},
              {"guidance", s.guidance},
              {"sampler", s.sampler == diffusion::Sampler::kEuler ? "euler" : "langevin"},
              {"steps_per_level", s.steps_per_level},
              {"schedule", {{"sigma_max", s.sigma_max}, {"sigma_min", s.sigma_min}, {"levels", s.levels}, {"eta", s.eta}}},
              {"dims", {s.dims.nx, s.dims.ny, s.dims.nz}},
              {"voxel_size", s.voxel_size},
              {"origin", {s.origin[0], s.origin[1], s.origin[2]}}};
    if (s.condition) d["condition"] = *s.condition;
    doc["static_scene"] = {{"diffusion", d}};
  } else {
    doc["static_scene"] = {{std::string(to_string(s.kind)), path_string(s.path)}};
  }
  if (cfg.layout.map || cfg.layout.layout) {
    Json l;
    if (cfg.layout.map) l["map"] = path_string(*cfg.layout.map);
    if (cfg.layout.layout) l["file"] = path_string(*cfg.layout.layout);
    l["center"] = pose2_to_json(cfg.layout.center);
    l["dims"] = {cfg.layout.nx, cfg.layout.ny};
    l["resolution"] = cfg.layout.resolution;
    doc["layout"] = l;
  }
  doc["asset_dir"] = path_string(cfg.asset_dir);
  doc["actors"] = Json::array();
  for (const auto& a : cfg.actors) {
    Json j = {{"class", std::string(world::to_string(a.cls))},
              {"footprint", {a.footprint.length, a.footprint.width, a.footprint.height}}};
    if (a.asset) j["asset"] = path_string(*a.asset);
    doc["actors"].push_back(j);
  }
  if (cfg.trajectory_bank) doc["trajectory_bank"] = path_string(*cfg.trajectory_bank);
  doc["lidar"] = Json::parse(sensor::dump_lidar_config(cfg.lidar));
  doc["raydrop"] = raydrop_to_json(cfg.raydrop);
  if (cfg.ego) doc["ego"] = {{"start", pose2_to_json(cfg.ego->start)}, {"speed", cfg.ego->speed}};
  doc["frames"] = cfg.frames;
  doc["dt"] = cfg.dt;
  doc["seed"] = cfg.seed;
  doc["max_attempts"] = cfg.max_attempts;
  doc["axle_offset"] = cfg.axle_offset;
  doc["accumulate"] = cfg.accumulate;
  return doc;
}

ScanConfig parse_scan_config(std::string_view text, const fs::path& base_dir) {
  Json doc = parse_json(text, "scan config");
  ScanConfig cfg;
  try {
    check_keys(doc, {"scene", "lidar", "ego", "raydrop", "seed"}, "scan config");
    if (!doc.contains("scene") || !doc.contains("lidar")) throw InvalidArgument("scan config needs scene and lidar");
    auto& sc = doc.at("scene");
    check_keys(sc, {"tsdf", "mesh", "plane"}, "scene");
    if (sc.size() != 1) throw InvalidArgument("scene needs exactly one of tsdf, mesh, plane");
    if (sc.contains("tsdf")) {
      cfg.scene = ScanConfig::Scene::kTsdf;
      cfg.path = take_path(sc, "tsdf", base_dir);
    } else if (sc.contains("mesh")) {
      cfg.scene = ScanConfig::Scene::kMesh;
      cfg.path = take_path(sc, "mesh", base_dir);
    } else {
      const auto& pl = sc.at("plane");
      check_keys(pl, {"height", "half_extent"}, "scene.plane");
      cfg.scene = ScanConfig::Scene::kPlane;
      cfg.plane_height = pl.value("height", 0.0);
      cfg.plane_half_extent = pl.value("half_extent", cfg.plane_half_extent);
      if (!(cfg.plane_half_extent > 0.0)) throw InvalidArgument("scene.plane.half_extent must be > 0");
    }
    cfg.lidar = lidar_from_json(doc.at("lidar"), base_dir);
    if (doc.contains("ego")) cfg.ego = pose_from_json(doc.at("ego"));
    if (doc.contains("raydrop")) cfg.raydrop = raydrop_from_json(doc.at("raydrop"));
    cfg.seed = doc.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scan config: ") + e.what());
  }
  if (cfg.scene != ScanConfig::Scene::kPlane) require_file(cfg.path, "scene source");
  return cfg;
}

ScanConfig load_scan_config(const fs::path& path) {
  return parse_scan_config(read_text(path), fs::absolute(path).parent_path());
}

void PipelineConfig::validate() const {
  if (frames < 1) throw InvalidArgument("pipeline: frames must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("pipeline: dt must be > 0");
  if (max_attempts < 1) throw InvalidArgument("pipeline: max_attempts must be >= 1");
  require_file(static_scene.path, "static scene source");
  if (static_scene.kind == StaticSceneSpec::Kind::kDiffusion) {
    if (static_scene.dims.count() == 0) throw InvalidArgument("static_scene.diffusion.dims must be positive");
    if (!(static_scene.voxel_size > 0.0f)) throw InvalidArgument("static_scene.diffusion.voxel_size must be > 0");
  }
  if (layout.map) require_file(*layout.map, "vector map");
  if (layout.layout) require_file(*layout.layout, "layout");
  if (layout.map && (layout.nx < 1 || layout.ny < 1 || !(layout.resolution > 0.0)))
    throw InvalidArgument("layout: dims must be >= 1 and resolution > 0");
  for (const auto& a : actors) {
    if (a.asset) {
      if (a.cls == world::ActorClass::kPedestrian)
        throw InvalidArgument("pedestrian actors use the built-in articulated body; remove the asset");
      require_file(*a.asset, "actor asset");
    }
    if (!(a.footprint.length > 0 && a.footprint.width > 0 && a.footprint.height > 0))
      throw InvalidArgument("actor footprint extents must be > 0");
  }
  if ((!actors.empty() || !ego) && !trajectory_bank)
    throw InvalidArgument("pipeline: trajectory_bank is required unless there are no actors and the ego is fixed");
  if (trajectory_bank) require_file(*trajectory_bank, "trajectory bank");
  if (ego && (!(ego->speed >= 0.0) || !std::isfinite(ego->speed))) throw InvalidArgument("ego speed must be >= 0");
  lidar.validate();
}

}  // namespace lidarworld::pipeline
