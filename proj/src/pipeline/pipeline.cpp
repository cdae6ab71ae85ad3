// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/pipeline/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "lidarworld/core/error.hpp"
#include "lidarworld/diffusion/codec.hpp"
#include "lidarworld/diffusion/model.hpp"
#include "lidarworld/geometry/marching_cubes.hpp"
#include "lidarworld/sensor/raydrop.hpp"
#include "lidarworld/world/compose.hpp"
#include "lidarworld/world/sampler.hpp"

namespace lidarworld::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kRaydropStream = 0x52445250;  // "RDRP"

std::string describe(const std::string& stage, std::optional<std::size_t> frame, const std::string& cause) {
  std::string s = "stage " + stage;
  if (frame) s += ", frame " + std::to_string(*frame);
  return s + ": " + cause;
}

// Runs fn, rethrowing any failure as a PipelineError for this stage.
template <class Fn>
auto stage(const std::string& name, std::optional<std::size_t> frame, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw PipelineError(name, frame, e.what(), true);
  } catch (const FormatError& e) {
    throw PipelineError(name, frame, e.what(), true);
  } catch (const std::exception& e) {
    throw PipelineError(name, frame, e.what(), false);
  }
}

std::string frame_name(std::size_t i, const char* suffix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu%s", i, suffix);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

geometry::TriMesh static_mesh(const StaticSceneSpec& spec, std::uint64_t seed, int threads) {
  switch (spec.kind) {
    case StaticSceneSpec::Kind::kMesh: return geometry::load_obj(spec.path);
    case StaticSceneSpec::Kind::kTsdf: return geometry::extract_mesh(geometry::load_tsdf(spec.path));
    case StaticSceneSpec::Kind::kDiffusion: return geometry::extract_mesh(sample_static_volume(spec, seed, threads));
  }
  return {};
}

}  // namespace

PipelineError::PipelineError(std::string stage, std::optional<std::size_t> frame, const std::string& cause,
                             bool validation)
    : std::runtime_error(describe(stage, frame, cause)), stage_(std::move(stage)), frame_(frame),
      validation_(validation) {}

std::string file_digest(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

geometry::TsdfVolume sample_static_volume(const StaticSceneSpec& spec, std::uint64_t seed, int threads) {
  auto model = diffusion::load_gaussian_model(spec.path);
  if (model.dim() != spec.dims.count())
    throw InvalidArgument("diffusion model dimension " + std::to_string(model.dim()) + " does not match dims " +
                          std::to_string(spec.dims.count()));
  const auto sched = diffusion::NoiseSchedule::geometric(spec.sigma_max, spec.sigma_min, spec.levels, spec.eta);
  model.bind_schedule(sched);
  std::optional<diffusion::Latent> cond;
  if (spec.condition) cond = diffusion::condition_code(*spec.condition);
  auto chains = diffusion::sample_chains(model, sched, cond ? &*cond : nullptr, spec.guidance, spec.sampler,
                                         spec.steps_per_level, 1, seed, threads);
  diffusion::Latent z({spec.dims.nz, spec.dims.ny, spec.dims.nx}, std::move(chains.front().values));
  return diffusion::IdentityCodec(spec.voxel_size, spec.origin).decode(z);
}

std::vector<world::Actor> build_actors(const std::vector<ActorSpec>& specs) {
  std::vector<world::Actor> actors;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    const int id = static_cast<int>(i) + 1;
    world::Actor a;
    if (s.asset) {
      a.id = id;
      a.cls = s.cls;
      a.geometry = geometry::load_obj(*s.asset);
      a.footprint = s.footprint;
      a = world::rescale_actor(a, s.footprint);
    } else if (s.cls == world::ActorClass::kPedestrian) {
      a = world::make_pedestrian(id, s.footprint);
    } else if (s.cls == world::ActorClass::kVehicle) {
      a = world::make_vehicle(id, s.footprint);
    } else {
      a = world::make_box_actor(id, s.footprint);
    }
    a.validate();
    actors.push_back(std::move(a));
  }
  return actors;
}

std::vector<Pose> straight_ego_track(const world::WorldScene& scene, const EgoSpec& ego, std::size_t frames,
                                     double dt, double axle_offset) {
  std::vector<Pose> track;
  const Vec2 dir(std::cos(ego.start.heading), std::sin(ego.start.heading));
  for (std::size_t k = 0; k < frames; ++k) {
    const double s = ego.speed * dt * static_cast<double>(k);
    const double x = ego.start.x + s * dir.x(), y = ego.start.y + s * dir.y();
    const double z = world::ground_height(scene, x, y).value_or(0.0) + axle_offset;
    track.push_back(Pose::from_yaw(ego.start.heading, {x, y, z}));
  }
  return track;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir, int threads) {
  stage("validate", std::nullopt, [&] { cfg.validate(); });
  const bool write = !out_dir.empty();
  const fs::path marker = out_dir / ".partial";
  if (write) {
    stage("output", std::nullopt, [&] {
      fs::create_directories(out_dir);
      write_text(marker, "running\n");
    });
  }

  PipelineResult res;
  Json manifest;
  try {
    manifest["format"] = "lidarworld-manifest";
    manifest["version"] = 1;
    manifest["config"] = pipeline_config_json(cfg);

    Json inputs = Json::array();
    auto add_input = [&](const char* role, const fs::path& p) {
      inputs.push_back({{"role", role}, {"path", p.generic_string()}, {"fnv1a64", file_digest(p)}});
    };
    stage("inputs", std::nullopt, [&] {
      add_input("static_scene", cfg.static_scene.path);
      if (cfg.layout.map) add_input("vector_map", *cfg.layout.map);
      if (cfg.layout.layout) add_input("layout", *cfg.layout.layout);
      if (cfg.trajectory_bank) add_input("trajectory_bank", *cfg.trajectory_bank);
      if (cfg.source.is_object() && cfg.source.contains("lidar") && cfg.source.at("lidar").is_string())
        add_input("lidar", cfg.source.at("lidar").get<std::string>());
      for (const auto& a : cfg.actors)
        if (a.asset) add_input("actor_asset", *a.asset);
    });
    manifest["inputs"] = inputs;

    auto mesh = stage("static_scene", std::nullopt, [&] { return static_mesh(cfg.static_scene, cfg.seed, threads); });
    res.static_triangles = mesh.triangles.size();
    auto actors = stage("actors", std::nullopt, [&] { return build_actors(cfg.actors); });
    const auto scene =
        stage("scene", std::nullopt, [&] { return world::WorldScene::from_mesh(std::move(mesh), std::move(actors)); });

    const auto layout = stage("layout", std::nullopt, [&] {
      if (cfg.layout.layout) return world::load_layout(*cfg.layout.layout);
      if (cfg.layout.map)
        return world::rasterize_map(world::load_vector_map(*cfg.layout.map), cfg.layout.center, cfg.layout.nx,
                                    cfg.layout.ny, cfg.layout.resolution);
      return world::SemanticLayout{};
    });

    stage("trajectories", std::nullopt, [&] {
      world::SamplerParams sp;
      sp.steps = cfg.frames;
      sp.dt = cfg.dt;
      sp.axle_offset = cfg.axle_offset;
      std::optional<std::vector<Pose>> ego;
      if (cfg.ego) ego = straight_ego_track(scene, *cfg.ego, cfg.frames, cfg.dt, cfg.axle_offset);
      if (ego && scene.actors.empty()) {
        res.trajectory.dt = cfg.dt;
        for (const auto& p : *ego) res.trajectory.steps.push_back({p, {}});
        return;
      }
      const auto bank = world::load_trajectory_bank(*cfg.trajectory_bank);
      auto sampled = world::sample_trajectories(bank, scene, layout, scene.actors.size(), cfg.seed, cfg.max_attempts,
                                                sp, ego);
      res.trajectory = std::move(sampled.trajectory);
      res.attempts = sampled.attempts;
      res.accepted = sampled.accepted;
    });
    manifest["static_mesh"] = {{"triangles", res.static_triangles}};
    manifest["sampling"] = {{"attempts", res.attempts},
                            {"accepted", res.accepted},
                            {"acceptance_ratio", res.attempts == 0 ? 1.0
                                                                   : static_cast<double>(res.accepted) /
                                                                         static_cast<double>(res.attempts)}};

    const sensor::AnalyticRaydrop drop(cfg.raydrop.a, cfg.raydrop.b, cfg.raydrop.c);
    Json frames = Json::array();
    sensor::PointCloud accumulated;
    accumulated.frame = sensor::Frame::kWorld;
    for (std::size_t t = 0; t < cfg.frames; ++t) {
      const auto& step = res.trajectory.steps[t];
      const auto composed = stage("compose", t, [&] { return world::compose(scene, step); });
      auto scan = stage("scan", t, [&] { return sensor::simulate_scan(composed, cfg.lidar, step.ego, threads); });
      stage("raydrop", t, [&] {
        Rng rng = Rng::substream(cfg.seed, kRaydropStream, t);
        auto [image, cloud] =
            sensor::apply_raydrop(scan.image, scan.cloud, drop, cfg.raydrop.mode, cfg.raydrop.temperature, rng);
        scan.image = std::move(image);
        scan.cloud = std::move(cloud);
      });
      FrameOutput out{t, static_cast<double>(t) * cfg.dt, step.ego, std::move(scan)};
      if (cfg.accumulate) {
        const auto world_pts = out.scan.cloud.transformed(out.ego, sensor::Frame::kWorld);
        accumulated.points.insert(accumulated.points.end(), world_pts.points.begin(), world_pts.points.end());
        accumulated.beam.insert(accumulated.beam.end(), world_pts.beam.begin(), world_pts.beam.end());
        accumulated.azimuth.insert(accumulated.azimuth.end(), world_pts.azimuth.begin(), world_pts.azimuth.end());
        accumulated.label.insert(accumulated.label.end(), world_pts.label.begin(), world_pts.label.end());
      }
      if (write) {
        stage("write", t, [&] {
          const auto ply = frame_name(t, ".ply"), rimg = frame_name(t, ".rimg"), pose = frame_name(t, "_pose.json");
          sensor::save_ply(out_dir / ply, out.scan.cloud);
          sensor::save_range_image(out_dir / rimg, out.scan.image);
          Json pj = {{"frame", t}, {"time", out.time}, {"ego", pose_to_json(out.ego)}, {"actors", Json::array()}};
          for (const auto& a : step.actors) {
            Json aj = pose_to_json(a.pose);
            aj["id"] = a.actor_id;
            aj["joints"] = a.joints.size();
            pj["actors"].push_back(aj);
          }
          write_text(out_dir / pose, pj.dump(2) + "\n");
          frames.push_back({{"index", t},
                            {"time", out.time},
                            {"points", out.scan.cloud.size()},
                            {"ply", ply},
                            {"ply_fnv1a64", file_digest(out_dir / ply)},
                            {"range_image", rimg},
                            {"range_image_fnv1a64", file_digest(out_dir / rimg)},
                            {"pose", pose}});
        });
      }
      res.frames.push_back(std::move(out));
    }
    manifest["frames"] = frames;
    if (cfg.accumulate && write) {
      stage("accumulate", std::nullopt, [&] {
        sensor::save_ply(out_dir / "accumulated.ply", accumulated);
        manifest["accumulated"] = {{"ply", "accumulated.ply"},
                                   {"points", accumulated.size()},
                                   {"fnv1a64", file_digest(out_dir / "accumulated.ply")}};
      });
    }
    if (write) {
      stage("manifest", std::nullopt, [&] {
        write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
        fs::remove(marker);
      });
    }
  } catch (const PipelineError& e) {
    if (write) {
      std::string note = "stage: " + e.stage() + "\n";
      if (e.frame()) note += "frame: " + std::to_string(*e.frame()) + "\n";
      note += std::string("error: ") + e.what() + "\n";
      try {
        write_text(marker, note);
      } catch (const std::exception&) {
      }
    }
    throw;
  }
  res.manifest = std::move(manifest);
  return res;
}

}  // namespace lidarworld::pipeline
