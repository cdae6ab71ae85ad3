// SPDX-License-Identifier: Apache-2.0
// Command-line entry points. Data goes to files (eval reports also to
// stdout); progress and errors go to stderr. Exit codes: 0 success,
// 2 invalid input, 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lidarworld/core/error.hpp"
#include "lidarworld/diffusion/codec.hpp"
#include "lidarworld/diffusion/latent.hpp"
#include "lidarworld/diffusion/model.hpp"
#include "lidarworld/geometry/marching_cubes.hpp"
#include "lidarworld/metrics/bev.hpp"
#include "lidarworld/metrics/registration.hpp"
#include "lidarworld/pipeline/pipeline.hpp"
#include "lidarworld/pipeline/testdata.hpp"
#include "lidarworld/world/compose.hpp"

namespace fs = std::filesystem;
using namespace lidarworld;
using pipeline::Json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = "out";
  std::string config;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

Json config_json(const Globals& g) {
  return g.config.empty() ? Json::object() : pipeline::parse_json(pipeline::read_text(g.config), g.config);
}

fs::path config_dir(const Globals& g) { return g.config.empty() ? fs::current_path() : fs::absolute(g.config).parent_path(); }

std::vector<Vec3> load_points(const std::string& path) { return sensor::load_point_cloud(path).points; }

void emit_report(const Globals& g, bool write, const std::string& metric, double value, const Json& params,
                 const std::vector<std::string>& inputs, Json extra = Json::object()) {
  Json rep = {{"metric", metric}, {"value", value}, {"parameters", params}, {"inputs", inputs}};
  for (auto& [k, v] : extra.items()) rep[k] = v;
  const std::string text = rep.dump(2) + "\n";
  std::cout << text;
  if (write) write_file(out_path(g, "eval_" + metric + ".json"), text);
}

// ---- rasterize -------------------------------------------------------------

struct RasterizeArgs {
  std::string map, output = "layout.layo";
  std::vector<double> center;
  std::vector<std::size_t> dims;
  std::optional<double> resolution;
};

void run_rasterize(const Globals& g, const RasterizeArgs& a) {
  const Json cfg = config_json(g);
  std::string map = a.map;
  if (map.empty() && cfg.contains("map")) map = pipeline::resolve(cfg.at("map").get<std::string>(), config_dir(g)).string();
  if (map.empty()) throw InvalidArgument("rasterize: --map is required");
  world::Pose2 center = cfg.contains("center") ? pipeline::pose2_from_json(cfg.at("center")) : world::Pose2{};
  if (!a.center.empty()) {
    if (a.center.size() != 3) throw InvalidArgument("--center needs x,y,heading_deg");
    center = {a.center[0], a.center[1], a.center[2] * kDeg};
  }
  std::vector<std::size_t> dims = cfg.value("dims", std::vector<std::size_t>{200, 200});
  if (!a.dims.empty()) dims = a.dims;
  if (dims.size() != 2) throw InvalidArgument("--dims needs nx,ny");
  const double res = a.resolution.value_or(cfg.value("resolution", 0.5));
  const auto layout = world::rasterize_map(world::load_vector_map(map), center, dims[0], dims[1], res);
  const auto path = out_path(g, a.output);
  world::save_layout(path, layout);
  std::cerr << "rasterize: " << layout.nx << "x" << layout.ny << " cells, " << layout.channels() << " channels -> "
            << path.string() << "\n";
}

// ---- mesh ------------------------------------------------------------------

void run_mesh(const Globals& g, const std::string& tsdf, float iso, const std::string& output) {
  const auto mesh = geometry::extract_mesh(geometry::load_tsdf(tsdf), iso);
  const auto path = out_path(g, output);
  geometry::save_obj(path, mesh);
  std::cerr << "mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " triangles -> "
            << path.string() << "\n";
}

// ---- scan ------------------------------------------------------------------

void run_scan(const Globals& g, const std::string& prefix) {
  if (g.config.empty()) throw InvalidArgument("scan: --config is required");
  auto cfg = pipeline::load_scan_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  geometry::TriMesh mesh;
  switch (cfg.scene) {
    case pipeline::ScanConfig::Scene::kTsdf: mesh = geometry::extract_mesh(geometry::load_tsdf(cfg.path)); break;
    case pipeline::ScanConfig::Scene::kMesh: mesh = geometry::load_obj(cfg.path); break;
    case pipeline::ScanConfig::Scene::kPlane: {
      const double h = cfg.plane_half_extent;
      mesh = geometry::make_quad_mesh({-h, -h}, {h, h}, cfg.plane_height);
      break;
    }
  }
  const auto scene = world::compose(world::WorldScene::from_mesh(std::move(mesh)), {});
  auto scan = sensor::simulate_scan(scene, cfg.lidar, cfg.ego, g.threads);
  const sensor::AnalyticRaydrop drop(cfg.raydrop.a, cfg.raydrop.b, cfg.raydrop.c);
  Rng rng = Rng::substream(cfg.seed, 0x52445250, 0);
  auto [image, cloud] = sensor::apply_raydrop(scan.image, scan.cloud, drop, cfg.raydrop.mode, cfg.raydrop.temperature, rng);
  sensor::save_ply(out_path(g, prefix + ".ply"), cloud);
  sensor::save_range_image(out_path(g, prefix + ".rimg"), image);
  std::cerr << "scan: " << cloud.size() << " points (" << image.valid_count() << " of " << image.depth.size()
            << " pixels) -> " << (fs::path(g.out_dir) / prefix).string() << ".{ply,rimg}\n";
}

// ---- simulate --------------------------------------------------------------

void run_simulate(const Globals& g, std::optional<std::size_t> frames, bool accumulate) {
  if (g.config.empty()) throw InvalidArgument("simulate: --config is required");
  auto cfg = pipeline::load_pipeline_config(g.config);
  // Overrides are folded into the source document so the manifest reproduces the run.
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.source["seed"] = cfg.seed;
  }
  if (frames) {
    cfg.frames = *frames;
    cfg.source["frames"] = cfg.frames;
  }
  if (accumulate) {
    cfg.accumulate = true;
    cfg.source["accumulate"] = true;
  }
  const auto res = pipeline::run_pipeline(cfg, g.out_dir, g.threads);
  std::size_t points = 0;
  for (const auto& f : res.frames) points += f.scan.cloud.size();
  std::cerr << "simulate: " << res.frames.size() << " frames, " << points << " points, static mesh "
            << res.static_triangles << " triangles, sampling " << res.accepted << "/" << res.attempts
            << " accepted -> " << g.out_dir << "\n";
}

// ---- sample ----------------------------------------------------------------

struct SampleArgs {
  std::string model;
  std::optional<double> guidance;
  std::optional<long> condition;
  std::string sampler;
  std::optional<std::size_t> chains, steps_per_level;
  std::vector<std::size_t> tsdf_dims;
  double voxel_size = 0.5;
  std::vector<float> origin;
};

void run_sample(const Globals& g, const SampleArgs& a) {
  const Json cfg = config_json(g);
  std::string model_path = a.model;
  if (model_path.empty() && cfg.contains("model"))
    model_path = pipeline::resolve(cfg.at("model").get<std::string>(), config_dir(g)).string();
  if (model_path.empty()) throw InvalidArgument("sample: --model is required");
  const double w = a.guidance.value_or(cfg.value("guidance", 0.0));
  std::optional<long> cond_id = a.condition;
  if (!cond_id && cfg.contains("condition")) cond_id = cfg.at("condition").get<long>();
  const std::string sampler_name = !a.sampler.empty() ? a.sampler : cfg.value("sampler", std::string("langevin"));
  diffusion::Sampler sampler;
  if (sampler_name == "langevin") sampler = diffusion::Sampler::kLangevin;
  else if (sampler_name == "euler") sampler = diffusion::Sampler::kEuler;
  else throw InvalidArgument("--sampler must be langevin or euler");
  const std::size_t n = a.chains.value_or(cfg.value("chains", std::size_t{100}));
  const std::size_t spl = a.steps_per_level.value_or(cfg.value("steps_per_level", std::size_t{20}));
  const std::uint64_t seed = g.seed.value_or(cfg.value("seed", std::uint64_t{0}));
  if (n < 1) throw InvalidArgument("--chains must be >= 1");

  auto model = diffusion::load_gaussian_model(model_path);
  const auto sched = diffusion::NoiseSchedule::geometric();
  model.bind_schedule(sched);
  std::optional<diffusion::Latent> cond;
  if (cond_id) cond = diffusion::condition_code(*cond_id);
  if (!cond && w != 0.0) throw InvalidArgument("--guidance needs --condition");
  const auto chains = diffusion::sample_chains(model, sched, cond ? &*cond : nullptr, w, sampler, spl, n, seed, g.threads);

  const std::size_t d = model.dim();
  std::vector<double> all;
  all.reserve(n * d);
  for (const auto& c : chains) all.insert(all.end(), c.values.begin(), c.values.end());
  diffusion::save_latent(out_path(g, "samples.latn"), diffusion::Latent({n, d}, all));

  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& c : chains)
    for (std::size_t i = 0; i < d; ++i) mean[i] += c.values[i] / static_cast<double>(n);
  for (const auto& c : chains)
    for (std::size_t i = 0; i < d; ++i)
      var[i] += (c.values[i] - mean[i]) * (c.values[i] - mean[i]) / static_cast<double>(n > 1 ? n - 1 : 1);
  // Guided target: (1 + w) * mu_c - w * mu_uncond with the model variance.
  std::vector<double> target(d);
  const auto& mu_c = model.mean(cond ? &*cond : nullptr);
  const auto& mu_u = model.mean(nullptr);
  for (std::size_t i = 0; i < d; ++i) target[i] = (1.0 + w) * mu_c[i] - w * mu_u[i];
  Json rep = {{"sampler", sampler_name}, {"chains", n},         {"guidance", w},
              {"seed", seed},            {"dim", d},            {"steps_per_level", spl},
              {"target_variance", model.variance()}};
  if (cond_id) rep["condition"] = *cond_id;
  if (d <= 64) {
    rep["mean"] = mean;
    rep["variance"] = var;
    rep["target_mean"] = target;
  }
  double mean_err = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean_err = std::max(mean_err, std::abs(mean[i] - target[i]));
  rep["max_abs_mean_error"] = mean_err;
  write_file(out_path(g, "sample_report.json"), rep.dump(2) + "\n");

  if (!a.tsdf_dims.empty()) {
    if (a.tsdf_dims.size() != 3 || a.tsdf_dims[0] * a.tsdf_dims[1] * a.tsdf_dims[2] != d)
      throw InvalidArgument("--tsdf-dims must be nx,ny,nz with nx*ny*nz equal to the model dimension");
    std::array<float, 3> origin{0.0f, 0.0f, 0.0f};
    if (!a.origin.empty()) {
      if (a.origin.size() != 3) throw InvalidArgument("--origin needs x,y,z");
      origin = {a.origin[0], a.origin[1], a.origin[2]};
    }
    diffusion::Latent z({a.tsdf_dims[2], a.tsdf_dims[1], a.tsdf_dims[0]}, chains.front().values);
    geometry::save_tsdf(out_path(g, "sample.tsdf"),
                        diffusion::IdentityCodec(static_cast<float>(a.voxel_size), origin).decode(z));
  }
  std::cerr << "sample: " << n << " " << sampler_name << " chains of dim " << d << ", max |mean - target| "
            << mean_err << " -> " << g.out_dir << "\n";
}

// ---- raydrop ---------------------------------------------------------------

struct RaydropArgs {
  std::string image, cloud, lidar, output = "raydrop";
  std::string mode = "gumbel";
  double temperature = 0.5, a = 4.0, b = 0.05, c = 2.0;
};

void run_raydrop(const Globals& g, const RaydropArgs& r) {
  const auto cfg = std::make_shared<const sensor::LidarConfig>(sensor::load_lidar_config(r.lidar));
  auto image = sensor::load_range_image(r.image);
  if (image.beams != cfg->beams() || image.azimuths != cfg->azimuth_count)
    throw InvalidArgument("raydrop: range image does not match the lidar config");
  image.config = cfg;
  const auto cloud = sensor::load_ply(r.cloud);
  Rng rng = Rng::substream(g.seed.value_or(0), 0x52445250, 0);
  const sensor::AnalyticRaydrop model(r.a, r.b, r.c);
  auto [img, pc] = sensor::apply_raydrop(image, cloud, model, sensor::parse_raydrop_mode(r.mode), r.temperature, rng);
  sensor::save_ply(out_path(g, r.output + ".ply"), pc);
  sensor::save_range_image(out_path(g, r.output + ".rimg"), img);
  std::cerr << "raydrop: kept " << pc.size() << " of " << cloud.size() << " points\n";
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> files, set_a, set_b;
  std::size_t grid = 100;
  double extent = 50.0, z_min = -3.0, z_max = 5.0;
  std::optional<double> bandwidth;
  double tau = 0.5;
  int max_iters = 50;
  double max_correspondence = 1.0;
  bool write = false;
};

metrics::BevParams bev_params(const EvalArgs& e) { return {e.grid, e.extent, e.z_min, e.z_max}; }

Json bev_json(const EvalArgs& e) {
  return {{"grid", e.grid}, {"extent_m", e.extent}, {"resolution_m", 2.0 * e.extent / static_cast<double>(e.grid)},
          {"z_min", e.z_min}, {"z_max", e.z_max}};
}

std::vector<metrics::BevHistogram> histograms(const std::vector<std::string>& files, const EvalArgs& e) {
  std::vector<metrics::BevHistogram> hs;
  for (const auto& f : files) hs.push_back(metrics::bev_histogram(load_points(f), bev_params(e)));
  return hs;
}

void export_layouts(const Globals& g, const EvalArgs& e, const std::vector<metrics::BevHistogram>& a,
                    const std::vector<metrics::BevHistogram>& b) {
  if (!e.write) return;
  world::save_layout(out_path(g, "bev_a.layo"), metrics::to_layout(metrics::aggregate(a)));
  world::save_layout(out_path(g, "bev_b.layo"), metrics::to_layout(metrics::aggregate(b)));
}

// Two positional files, or --set-a / --set-b.
std::pair<std::vector<std::string>, std::vector<std::string>> two_sets(const EvalArgs& e, const char* metric) {
  if (!e.set_a.empty() || !e.set_b.empty()) {
    if (e.set_a.empty() || e.set_b.empty() || !e.files.empty())
      throw InvalidArgument(std::string(metric) + ": give both --set-a and --set-b, or two files");
    return {e.set_a, e.set_b};
  }
  if (e.files.size() != 2) throw InvalidArgument(std::string(metric) + ": expected two point-cloud files");
  return {{e.files[0]}, {e.files[1]}};
}

void run_eval_mmd(const Globals& g, const EvalArgs& e) {
  const auto [fa, fb] = two_sets(e, "mmd");
  const auto a = histograms(fa, e), b = histograms(fb, e);
  const double bw = e.bandwidth.value_or(metrics::median_bandwidth(a, b));
  Json p = bev_json(e);
  p["kernel"] = "gaussian";
  p["estimator"] = "unbiased (V-statistic for singleton sets), clamped at 0";
  p["bandwidth"] = bw;
  p["bandwidth_rule"] = e.bandwidth ? "fixed" : "median pairwise distance";
  std::vector<std::string> inputs = fa;
  inputs.insert(inputs.end(), fb.begin(), fb.end());
  export_layouts(g, e, a, b);
  emit_report(g, e.write, "mmd", metrics::mmd(a, b, bw), p, inputs, {{"set_sizes", {fa.size(), fb.size()}}});
}

void run_eval_jsd(const Globals& g, const EvalArgs& e) {
  const auto [fa, fb] = two_sets(e, "jsd");
  const auto a = histograms(fa, e), b = histograms(fb, e);
  Json p = bev_json(e);
  p["log_base"] = "e";
  std::vector<std::string> inputs = fa;
  inputs.insert(inputs.end(), fb.begin(), fb.end());
  export_layouts(g, e, a, b);
  emit_report(g, e.write, "jsd", metrics::jsd(metrics::aggregate(a), metrics::aggregate(b)), p, inputs);
}

void run_eval_consistency(const Globals& g, const EvalArgs& e) {
  if (e.files.size() < 2) throw InvalidArgument("consistency: expected at least two scans");
  std::vector<std::vector<Vec3>> scans;
  for (const auto& f : e.files) scans.push_back(load_points(f));
  metrics::IcpParams ip;
  ip.max_iters = e.max_iters;
  ip.max_correspondence = e.max_correspondence;
  const auto rep = metrics::sequence_consistency(scans, e.tau, ip, {}, g.threads);
  Json p = {{"tau_m", e.tau},
            {"icp_max_iters", ip.max_iters},
            {"icp_tol", ip.tol},
            {"icp_max_correspondence_m", ip.max_correspondence},
            {"normal_neighbors", ip.normal_neighbors},
            {"total", "sum of per-pair mean residuals"}};
  Json poses = Json::array();
  for (const auto& pose : rep.relative_poses) poses.push_back(pipeline::pose_to_json(pose));
  emit_report(g, e.write, "consistency", rep.average_energy, p, e.files,
              {{"total_energy", rep.total_energy},
               {"average_energy", rep.average_energy},
               {"outlier_percent", rep.outlier_percent},
               {"pair_energy", rep.pair_energy},
               {"relative_poses", poses}});
}

void run_eval_chamfer(const Globals& g, const EvalArgs& e) {
  if (e.files.size() != 2) throw InvalidArgument("chamfer: expected two point-cloud files");
  emit_report(g, e.write, "chamfer", metrics::chamfer(load_points(e.files[0]), load_points(e.files[1])),
              {{"distance", "symmetric mean nearest-neighbour, meters"}}, e.files);
}

// ---- gen-testdata ----------------------------------------------------------

void run_gen_testdata(const Globals& g) {
  namespace td = pipeline::testdata;
  const fs::path dir = g.out_dir;
  fs::create_directories(dir / "assets");
  auto put = [&](const std::string& name, const Json& j) { write_file(dir / name, j.dump(2) + "\n"); };

  geometry::save_tsdf(dir / "plane.tsdf", td::plane_volume(0.0, 0.2, 40.0));
  geometry::save_tsdf(dir / "street.tsdf", td::street_volume(0.4, 80.0));
  write_file(dir / "map.json", world::dump_vector_map(td::street_map(80.0)));
  write_file(dir / "bank.json", world::dump_trajectory_bank(td::street_bank(1.0, 0.1)));
  put("lidar.json", td::lidar_json());
  put("gaussian_cfg.json", td::cfg_demo_model_json());
  geometry::VolumeDims dims;
  float voxel = 0.0f;
  std::array<float, 3> origin{};
  put("scene_model.json", td::scene_model_json(1e-4, dims, voxel, origin));
  geometry::save_obj(dir / "assets" / "sedan.obj", world::make_vehicle(1).rest_mesh());

  Json plane_lidar = {{"elevations_deg", {-2, -4, -6, -8, -10, -12, -14, -16, -18, -20, -22, -24}},
                      {"azimuth_count", 360},
                      {"max_range", 120.0},
                      {"sensor_offset", {{"translation", {0.0, 0.0, 1.8}}}}};
  put("scan_plane.json", {{"scene", {{"plane", {{"height", 0.0}, {"half_extent", 100.0}}}}},
                          {"lidar", plane_lidar},
                          {"ego", {{"translation", {0.0, 0.0, 0.0}}}}});
  put("scan_street.json", {{"scene", {{"tsdf", "street.tsdf"}}}, {"lidar", "lidar.json"},
                           {"ego", {{"translation", {0.0, 0.0, 0.0}}, {"rpy_deg", {0.0, 0.0, 0.0}}}}});

  const Json layout = {{"map", "map.json"}, {"center", {0.0, 0.0, 0.0}}, {"dims", {160, 80}}, {"resolution", 0.5}};
  put("simulate.json", {{"static_scene", {{"tsdf", "street.tsdf"}}},
                        {"layout", layout},
                        {"asset_dir", "assets"},
                        {"actors", {{{"class", "vehicle"}, {"asset", "sedan.obj"}, {"footprint", {4.5, 2.0, 1.6}}},
                                    {{"class", "vehicle"}, {"footprint", {4.8, 2.1, 1.7}}},
                                    {{"class", "pedestrian"}}}},
                        {"trajectory_bank", "bank.json"},
                        {"lidar", "lidar.json"},
                        {"raydrop", {{"mode", "gumbel"}, {"temperature", 0.5}}},
                        {"frames", 10},
                        {"dt", 0.1},
                        {"seed", 7},
                        {"max_attempts", 2000}});
  put("simulate_static.json", {{"static_scene", {{"tsdf", "street.tsdf"}}},
                               {"lidar", "lidar.json"},
                               {"ego", {{"start", {-10.0, -1.75, 0.0}}, {"speed", 3.0}}},
                               {"raydrop", {{"mode", "none"}}},
                               {"frames", 10},
                               {"dt", 0.1},
                               {"seed", 7},
                               {"accumulate", true}});
  put("simulate_diffusion.json",
      {{"static_scene", {{"diffusion", {{"model", "scene_model.json"},
                                        {"condition", 1},
                                        {"guidance", 0.0},
                                        {"sampler", "euler"},
                                        {"dims", {dims.nx, dims.ny, dims.nz}},
                                        {"voxel_size", voxel},
                                        {"origin", {origin[0], origin[1], origin[2]}}}}}},
       {"lidar", "lidar.json"},
       {"ego", {{"start", {-5.0, 0.0, 0.0}}, {"speed", 2.0}}},
       {"frames", 3},
       {"seed", 7}});
  std::cerr << "gen-testdata: wrote scenes, map, bank, models and configs to " << dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR world composition, scan simulation and evaluation"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (overrides the config)");
  app.add_option("--threads", g.threads, "Worker threads; outputs do not depend on it")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--config", g.config, "JSON config for the subcommand")->check(CLI::ExistingFile);

  RasterizeArgs ra;
  auto* rasterize = app.add_subcommand("rasterize", "Rasterize a vector map into a LAYO layout");
  rasterize->add_option("--map", ra.map, "VectorMap JSON")->check(CLI::ExistingFile);
  rasterize->add_option("--center", ra.center, "x,y,heading_deg")->delimiter(',');
  rasterize->add_option("--dims", ra.dims, "nx,ny")->delimiter(',');
  rasterize->add_option("--resolution", ra.resolution, "Meters per cell");
  rasterize->add_option("-o,--output", ra.output, "Output file name");

  std::string mesh_tsdf, mesh_out = "mesh.obj";
  float iso = 0.0f;
  auto* mesh = app.add_subcommand("mesh", "Extract an OBJ mesh from a TSDF volume");
  mesh->add_option("--tsdf", mesh_tsdf, "TSDF volume")->required()->check(CLI::ExistingFile);
  mesh->add_option("--iso", iso, "Iso level");
  mesh->add_option("-o,--output", mesh_out, "Output file name");

  std::string scan_prefix = "scan";
  auto* scan = app.add_subcommand("scan", "Simulate one scan of a static scene (--config)");
  scan->add_option("-o,--output", scan_prefix, "Output file prefix");

  std::optional<std::size_t> sim_frames;
  bool sim_accumulate = false;
  auto* simulate = app.add_subcommand("simulate", "Run the full pipeline (--config)");
  simulate->add_option("--frames", sim_frames, "Override the frame count");
  simulate->add_flag("--accumulate", sim_accumulate, "Also write the world-frame union of all frames");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Diffusion sampling from a Gaussian score model");
  sample->add_option("--model", sa.model, "Gaussian model JSON")->check(CLI::ExistingFile);
  sample->add_option("--guidance", sa.guidance, "Classifier-free guidance weight w");
  sample->add_option("--condition", sa.condition, "Condition id");
  sample->add_option("--sampler", sa.sampler, "langevin or euler");
  sample->add_option("--chains", sa.chains, "Number of chains");
  sample->add_option("--steps-per-level", sa.steps_per_level, "Langevin steps per noise level");
  sample->add_option("--tsdf-dims", sa.tsdf_dims, "nx,ny,nz: also decode chain 0 to sample.tsdf")->delimiter(',');
  sample->add_option("--voxel-size", sa.voxel_size, "Voxel size for --tsdf-dims");
  sample->add_option("--origin", sa.origin, "x,y,z for --tsdf-dims")->delimiter(',');

  RaydropArgs rd;
  auto* raydrop = app.add_subcommand("raydrop", "Apply raydrop to an existing scan");
  raydrop->add_option("--image", rd.image, "Range image (RIMG)")->required()->check(CLI::ExistingFile);
  raydrop->add_option("--cloud", rd.cloud, "Point cloud (PLY) with pixel indices")->required()->check(CLI::ExistingFile);
  raydrop->add_option("--lidar", rd.lidar, "Lidar config JSON")->required()->check(CLI::ExistingFile);
  raydrop->add_option("--mode", rd.mode, "none, bernoulli, softmax or gumbel");
  raydrop->add_option("--temperature", rd.temperature, "Gumbel-sigmoid temperature");
  raydrop->add_option("--a", rd.a, "Grazing weight");
  raydrop->add_option("--b", rd.b, "Range weight (1/m)");
  raydrop->add_option("--c", rd.c, "Bias");
  raydrop->add_option("-o,--output", rd.output, "Output file prefix");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Metrics over point clouds (PLY or XYZ)");
  eval->require_subcommand(1);
  eval->add_flag("--write", ev.write, "Also write the report (and BEV layouts) into --out-dir");
  auto add_bev = [&](CLI::App* c) {
    c->add_option("--set-a", ev.set_a, "First set of clouds")->check(CLI::ExistingFile);
    c->add_option("--set-b", ev.set_b, "Second set of clouds")->check(CLI::ExistingFile);
    c->add_option("--grid", ev.grid, "Histogram cells per side");
    c->add_option("--extent", ev.extent, "Half-width of the histogram (m)");
    c->add_option("--z-min", ev.z_min, "Lower z of the slab");
    c->add_option("--z-max", ev.z_max, "Upper z of the slab");
  };
  auto* e_mmd = eval->add_subcommand("mmd", "MMD between BEV occupancy histogram sets");
  e_mmd->add_option("files", ev.files, "Two clouds (singleton sets)")->check(CLI::ExistingFile);
  add_bev(e_mmd);
  e_mmd->add_option("--bandwidth", ev.bandwidth, "Gaussian kernel bandwidth (default: median heuristic)");
  auto* e_jsd = eval->add_subcommand("jsd", "JSD between aggregated BEV occupancy histograms");
  e_jsd->add_option("files", ev.files, "Two clouds")->check(CLI::ExistingFile);
  add_bev(e_jsd);
  auto* e_cons = eval->add_subcommand("consistency", "Sequential point-to-plane ICP energy");
  e_cons->add_option("files", ev.files, "Scans in time order")->required()->check(CLI::ExistingFile);
  e_cons->add_option("--tau", ev.tau, "Outlier threshold (m)");
  e_cons->add_option("--max-iters", ev.max_iters, "ICP iteration cap");
  e_cons->add_option("--max-correspondence", ev.max_correspondence, "ICP correspondence cutoff (m)");
  auto* e_chamfer = eval->add_subcommand("chamfer", "Symmetric Chamfer distance");
  e_chamfer->add_option("files", ev.files, "Two clouds")->required()->check(CLI::ExistingFile);

  app.add_subcommand("gen-testdata", "Write analytic scenes, maps, banks, models and configs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*rasterize) run_rasterize(g, ra);
    else if (*mesh) run_mesh(g, mesh_tsdf, iso, mesh_out);
    else if (*scan) run_scan(g, scan_prefix);
    else if (*simulate) run_simulate(g, sim_frames, sim_accumulate);
    else if (*sample) run_sample(g, sa);
    else if (*raydrop) run_raydrop(g, rd);
    else if (*e_mmd) run_eval_mmd(g, ev);
    else if (*e_jsd) run_eval_jsd(g, ev);
    else if (*e_cons) run_eval_consistency(g, ev);
    else if (*e_chamfer) run_eval_chamfer(g, ev);
    else run_gen_testdata(g);
  } catch (const pipeline::PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.validation() ? 2 : 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ExhaustionError& e) {
    std::cerr << "error: " << e.what() << " (accepted " << e.accepted() << " of " << e.requested() << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
