// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. One line per criterion:
//   PASS|FAIL  <name>  <measurements>  <elapsed>/<budget> s
// Exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "lidarworld/core/error.hpp"
#include "lidarworld/diffusion/sampling.hpp"
#include "lidarworld/geometry/bvh.hpp"
#include "lidarworld/geometry/marching_cubes.hpp"
#include "lidarworld/metrics/bev.hpp"
#include "lidarworld/metrics/registration.hpp"
#include "lidarworld/pipeline/pipeline.hpp"
#include "lidarworld/pipeline/testdata.hpp"
#include "lidarworld/sensor/raydrop.hpp"
#include "lidarworld/sensor/scan.hpp"
#include "lidarworld/world/compose.hpp"
#include "lidarworld/world/sampler.hpp"

using namespace lidarworld;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void criterion(const std::string& name, double budget, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << "[exception: " << e.what() << "] ";
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= budget) out.pass = false;
  std::printf("%s  %-26s %s %.2f/%.0f s\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.str().c_str(),
              elapsed, budget);
  std::fflush(stdout);
  failures += out.pass ? 0 : 1;
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-6);
  return v.normalized();
}

// Cramer's-rule intersection against every triangle; shares no code with the
// library's intersection kernel.
std::optional<std::pair<double, std::uint32_t>> oracle_raycast(const geometry::TriMesh& m, const Vec3& o,
                                                               const Vec3& d, double max_range) {
  std::optional<std::pair<double, std::uint32_t>> best;
  for (std::uint32_t t = 0; t < m.triangles.size(); ++t) {
    const Vec3& a = m.vertices[m.triangles[t][0]];
    Eigen::Matrix3d A;
    A.col(0) = m.vertices[m.triangles[t][1]] - a;
    A.col(1) = m.vertices[m.triangles[t][2]] - a;
    A.col(2) = -d;
    if (std::abs(A.determinant()) < 1e-300) continue;
    const Vec3 x = A.fullPivLu().solve(o - a);
    if (x[0] < 0 || x[1] < 0 || x[0] + x[1] > 1) continue;
    if (x[2] <= geometry::kSelfHitEpsilon || x[2] > max_range) continue;
    if (!best || x[2] < best->first) best = std::make_pair(x[2], t);
  }
  return best;
}

world::ComposedScene static_scene(geometry::TriMesh mesh) {
  return world::compose(world::WorldScene::from_mesh(std::move(mesh)), {});
}

std::vector<Vec3> moved_by(const Pose& t, const std::vector<Vec3>& pts) {
  std::vector<Vec3> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = t.apply(pts[i]);
  return out;
}

std::vector<Vec3> street_scan(const Pose& ego = Pose::identity()) {
  geometry::TriMesh m = geometry::make_quad_mesh({-60, -60}, {60, 60}, 0.0);
  m.append(geometry::make_box_mesh({12, 6, 2}, {8, 1, 2}));
  m.append(geometry::make_box_mesh({-5, -9, 3}, {10, 0.5, 3}));
  m.append(geometry::make_box_mesh({3, 12, 1.5}, {0.6, 5, 1.5}));
  m.append(geometry::make_box_mesh({-14, 4, 2}, {0.5, 6, 2}));
  m.append(geometry::make_uv_sphere({6, -3, 1}, 1.0, 12, 24));
  auto cfg = sensor::LidarConfig::uniform(16, deg(2), deg(-25), 360);
  cfg.max_range = 40.0;
  return sensor::simulate_scan(static_scene(std::move(m)), cfg, ego).cloud.points;
}

struct Moments {
  double mean = 0.0, var = 0.0;
};

Moments moments(const std::vector<diffusion::Latent>& xs, std::size_t i) {
  Moments m;
  for (const auto& x : xs) m.mean += x.values[i];
  m.mean /= static_cast<double>(xs.size());
  for (const auto& x : xs) m.var += (x.values[i] - m.mean) * (x.values[i] - m.mean);
  m.var /= static_cast<double>(xs.size() - 1);
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lidarworld_accept_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void raycast_oracle(Outcome& out) {
  Rng rng(2024);
  geometry::TriMesh m;
  for (std::uint32_t i = 0; i < 1000; ++i) {
    const Vec3 c(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    for (int k = 0; k < 3; ++k)
      m.vertices.push_back(c + Vec3(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)));
    m.triangles.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  std::vector<Vec3> origins, dirs;
  for (int i = 0; i < 10000; ++i) {
    origins.emplace_back(rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(-15, 15));
    dirs.push_back(random_unit(rng));
  }
  const auto t0 = Clock::now();
  const auto bvh = geometry::build_bvh(m);
  std::vector<std::optional<geometry::Hit>> hits(origins.size());
  for (std::size_t i = 0; i < origins.size(); ++i) hits[i] = bvh.raycast(origins[i], dirs[i], 100.0);
  const double bvh_seconds = seconds_since(t0);

  std::size_t n_hits = 0, presence_mismatch = 0, id_mismatch = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < origins.size(); ++i) {
    const auto want = oracle_raycast(m, origins[i], dirs[i], 100.0);
    if (hits[i].has_value() != want.has_value()) {
      ++presence_mismatch;
      continue;
    }
    if (!want) continue;
    ++n_hits;
    worst = std::max(worst, std::abs(hits[i]->distance - want->first));
    if (hits[i]->triangle_id != want->second) ++id_mismatch;
  }
  out.detail << "rays=10000 hits=" << n_hits << " max|dt|=" << worst << " presence_mismatch=" << presence_mismatch
             << " id_mismatch=" << id_mismatch << " bvh_time=" << bvh_seconds << "s ";
  out.check(presence_mismatch == 0, "hit/miss agreement");
  out.check(worst <= 1e-9, "distance within 1e-9");
  out.check(id_mismatch == 0, "same nearest triangle");
  out.check(bvh_seconds < 5.0, "runtime < 5 s");
}

void plane_scan(Outcome& out) {
  const double h = 1.8, voxel = 0.2;
  auto cfg = sensor::LidarConfig::uniform(12, deg(-2), deg(-24), 360);
  cfg.sensor_offset = Pose::identity();
  cfg.max_range = 120.0;
  const Pose ego = Pose::from_translation({0.1, 0.05, h});

  const auto exact = sensor::simulate_scan(static_scene(geometry::make_quad_mesh({-100, -100}, {100, 100}, 0.0)),
                                           cfg, ego);
  // Farthest return (-2 degrees) lands 51.6 m out; the volume covers 56 m.
  const auto vol = geometry::analytic_sdf(geometry::Plane{{0, 0, 1}, 0.0}, {561, 561, 8}, voxel,
                                          {-56.0f, -56.0f, -0.7f}, 3 * voxel);
  const auto mc = sensor::simulate_scan(static_scene(geometry::extract_mesh(vol)), cfg, ego);

  double worst_exact = 0.0, worst_mc = 0.0;
  for (std::size_t b = 0; b < cfg.beams(); ++b)
    for (std::size_t a = 0; a < cfg.azimuth_count; ++a) {
      const double want = h / std::sin(-cfg.elevations[b]);
      const auto i = exact.image.index(b, a);
      worst_exact = std::max(worst_exact, exact.image.mask[i] ? std::abs(exact.image.depth[i] - want) : HUGE_VAL);
      worst_mc = std::max(worst_mc, mc.image.mask[i] ? std::abs(mc.image.depth[i] - want) : HUGE_VAL);
    }
  out.detail << "beams=12 exact_max_err=" << worst_exact << " mc_max_err=" << worst_mc << " (voxel " << voxel << ") ";
  out.check(worst_exact <= 1e-9, "exact plane within 1e-9");
  out.check(worst_mc <= 2 * voxel, "marching-cubes plane within 2 voxels");
}

void mc_sphere(Outcome& out) {
  const double h = 0.2, r = 5 * h;
  const auto vol = geometry::analytic_sdf(geometry::Sphere{Vec3::Zero(), r}, {21, 21, 21}, h, Vec3(-2, -2, -2), 3 * h);
  const auto mesh = geometry::extract_mesh(vol);
  double worst = 0.0;
  for (const auto& v : mesh.vertices) worst = std::max(worst, std::abs(v.norm() - r));
  out.detail << "vertices=" << mesh.vertices.size() << " max|radius-r|=" << worst << " voxel=" << h << " ";
  out.check(!mesh.vertices.empty(), "non-empty mesh");
  out.check(worst <= h, "radii within one voxel");
}

void cfg_gaussian(Outcome& out) {
  using namespace diffusion;
  const std::size_t dim = 8, n = 2000;
  GaussianScoreModel m(std::vector<double>(dim, 0.0), 1.0, {{1, std::vector<double>(dim, 2.0)}});
  const auto sched = NoiseSchedule::geometric();
  m.bind_schedule(sched);
  const auto c = condition_code(1);
  const auto lang = sample_chains(m, sched, &c, 0.5, Sampler::kLangevin, 20, n, 11, 4);
  const auto euler = sample_chains(m, sched, &c, 0.0, Sampler::kEuler, 0, n, 21, 4);
  double lm = 0, lv = 0, em = 0, ev = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    const auto a = moments(lang, i), b = moments(euler, i);
    lm = std::max(lm, std::abs(a.mean - 3.0));
    lv = std::max(lv, std::abs(a.var - 1.0));
    em = std::max(em, std::abs(b.mean - 2.0));
    ev = std::max(ev, std::abs(b.var - 1.0));
  }
  out.detail << "chains=2000 langevin(w=.5) max|mean-3|=" << lm << " max|var-1|=" << lv
             << " euler(w=0) max|mean-2|=" << em << " max|var-1|=" << ev << " ";
  out.check(lm <= 0.15, "Langevin mean 3 +- 0.15");
  out.check(lv <= 0.2, "Langevin variance 1 +- 0.2");
  out.check(em <= 0.15, "Euler mean 2 +- 0.15");
  out.check(ev <= 0.2, "Euler variance 1 +- 0.2");
}

void gumbel_calibration(Outcome& out) {
  const std::size_t n = 1000000;
  for (const double p : {0.1, 0.5, 0.9}) {
    Rng rng(static_cast<std::uint64_t>(p * 1000) + 3);
    const std::vector<double> probs(n, p);
    const auto keep = sensor::gumbel_sigmoid_sample(probs, 0.5, rng, sensor::RaydropMode::kGumbel);
    const double frac = static_cast<double>(std::count(keep.begin(), keep.end(), 1)) / static_cast<double>(n);
    const double bound = 3 * std::sqrt(p * (1 - p) / static_cast<double>(n));
    out.detail << "p=" << p << ":" << frac << " ";
    out.check(std::abs(frac - p) <= bound, "keep fraction within 3 sigma at p=" + std::to_string(p));
  }
}

void metric_identities(Outcome& out) {
  const auto a = street_scan();
  const auto b = street_scan(Pose::from_translation({2.0, 0.5, 0.0}));
  const auto c = street_scan(Pose::from_translation({-3.0, 1.0, 0.0}));
  double slowest = 0.0;
  auto timed = [&](auto&& f) {
    const auto t0 = Clock::now();
    f();
    slowest = std::max(slowest, seconds_since(t0));
  };

  timed([&] {
    const std::vector<metrics::BevHistogram> set{metrics::bev_histogram(a), metrics::bev_histogram(b),
                                                 metrics::bev_histogram(c)};
    const double v = metrics::mmd(set, set, metrics::median_bandwidth(set, set));
    out.detail << "mmd(A,A)=" << v << " ";
    out.check(v <= 1e-12, "mmd(A,A) <= 1e-12");
  });
  timed([&] {
    const auto h = metrics::bev_histogram(a);
    const double same = metrics::jsd(h, h);
    // Disjoint supports: left and right halves of the grid.
    metrics::BevHistogram l, r;
    l.counts.assign(l.grid * l.grid, 0.0);
    r.counts.assign(r.grid * r.grid, 0.0);
    for (std::size_t j = 0; j < l.grid; ++j)
      for (std::size_t i = 0; i < l.grid; ++i) (i < l.grid / 2 ? l : r).counts[l.index(i, j)] = 1.0 + (i * j) % 3;
    const double disjoint = metrics::jsd(l, r);
    out.detail << "jsd(same)=" << same << " jsd(disjoint)-ln2=" << disjoint - std::numbers::ln2 << " ";
    out.check(same == 0.0, "jsd identical = 0");
    out.check(std::abs(disjoint - std::numbers::ln2) <= 1e-9, "jsd disjoint = ln 2");
  });
  timed([&] {
    const double self = metrics::chamfer(a, a);
    const double ab = metrics::chamfer(a, b), ba = metrics::chamfer(b, a);
    // Well separated points shifted by less than half their spacing: every
    // nearest neighbour is the point's own image.
    std::vector<Vec3> grid;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) grid.emplace_back(i, j, 0.1 * ((i + j) % 2));
    const Vec3 shift(0.1, -0.2, 0.15);
    const double shifted = metrics::chamfer(grid, moved_by(Pose::from_translation(shift), grid));
    out.detail << "chamfer(A,A)=" << self << " |chamfer(A,B)-chamfer(B,A)|=" << std::abs(ab - ba)
               << " chamfer(G,G+d)-|d|=" << shifted - shift.norm() << " ";
    out.check(self == 0.0, "chamfer(A,A) = 0");
    out.check(ab == ba, "chamfer symmetric");
    out.check(std::abs(shifted - shift.norm()) <= 1e-12, "chamfer of a small shift = |shift|");
  });
  timed([&] {
    const auto r = metrics::point_to_plane(a, metrics::PlaneTarget::build(a));
    const double worst = r.empty() ? HUGE_VAL : *std::max_element(r.begin(), r.end());
    out.detail << "point_to_plane(src,src) max=" << worst << " ";
    out.check(worst == 0.0, "point_to_plane(src,src) = 0");
  });
  out.detail << "slowest=" << slowest << "s ";
  out.check(slowest < 1.0, "each identity < 1 s");
}

void icp_recovery(Outcome& out) {
  Rng rng(1234);
  const auto tgt_pts = street_scan();
  const auto tgt = metrics::PlaneTarget::build(tgt_pts);
  int ok = 0;
  double worst_t = 0, worst_r = 0;
  for (int t = 0; t < 100; ++t) {
    const Pose g = Pose::from_axis_angle(random_unit(rng), rng.uniform(-deg(5), deg(5)),
                                         rng.uniform(0, 0.5) * random_unit(rng));
    const auto src = moved_by(g.inverse(), tgt_pts);
    try {
      const auto fit = metrics::icp_align(src, tgt);
      const Pose err = fit.pose * g.inverse();
      const double et = err.translation.norm(), er = rotation_angle(err.rotation);
      worst_t = std::max(worst_t, et);
      worst_r = std::max(worst_r, er);
      if (et <= 1e-2 && er <= deg(0.5)) ++ok;
    } catch (const ConvergenceError&) {
    }
  }
  out.detail << "points=" << tgt_pts.size() << " recovered=" << ok << "/100 worst_t=" << worst_t
             << "m worst_rot=" << worst_r * 180 / std::numbers::pi << "deg ";
  out.check(ok >= 95, ">= 95 of 100 recovered");
}

void temporal_consistency(Outcome& out) {
  const auto dir = scratch("consistency");
  geometry::save_tsdf(dir / "street.tsdf", pipeline::testdata::street_volume(0.4, 80.0));
  std::ofstream(dir / "lidar.json") << pipeline::testdata::lidar_json().dump();
  auto run = [&](const std::string& raydrop) {
    const auto cfg = pipeline::parse_pipeline_config(R"({
      "static_scene": {"tsdf": "street.tsdf"},
      "lidar": "lidar.json",
      "raydrop": {"mode": ")" + raydrop + R"("},
      "ego": {"start": [-20, -1.75, 0], "speed": 5},
      "frames": 10, "dt": 0.1, "seed": 5})",
                                                     dir);
    const auto res = pipeline::run_pipeline(cfg, dir / raydrop, 4);
    std::vector<std::vector<Vec3>> scans;
    for (const auto& f : res.frames) scans.push_back(f.scan.cloud.points);
    return metrics::sequence_consistency(scans, 0.5, {}, {}, 4);
  };
  const auto off = run("none");
  const auto on = run("gumbel");
  out.detail << "raydrop off: avg=" << off.average_energy << "m outliers=" << off.outlier_percent
             << "% | gumbel: avg=" << on.average_energy << "m outliers=" << on.outlier_percent << "% ";
  out.check(off.average_energy < 0.05, "average energy < 0.05 m");
  out.check(off.outlier_percent < 2.0, "outliers < 2%");
  out.check(on.outlier_percent - off.outlier_percent <= 1.0, "raydrop adds <= 1 pp outliers");
}

void rejective_sampling(Outcome& out) {
  using namespace world;
  world::SamplerParams params;
  params.steps = 31;
  TrajectoryBank bank;
  bank.templates.push_back(straight_template(ActorClass::kVehicle, 10.0, 3.0, 0.1));

  // Every 30 m track drawn from x in [-6, -1] crosses the wall at x = 10.
  geometry::TriMesh walled = geometry::make_quad_mesh({-500, -500}, {500, 500}, 0.0);
  walled.append(geometry::make_box_mesh({10, 0, 2}, {0.3, 200, 2}));
  const auto wall_scene = WorldScene::from_mesh(walled, {make_vehicle(1)});
  SemanticLayout layout(6, 11, 1.0f, default_class_names());
  layout.origin = {-6.0f, -5.0f};
  for (std::size_t y = 0; y < 11; ++y)
    for (std::size_t x = 0; x < 6; ++x) layout.set(1, x, y, true);
  const auto anchors = anchor_cells(layout);
  const auto local = wall_scene.actors[0].local_bounds();
  Rng rng(17);
  int wall_accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = draw_placement(bank, ActorClass::kVehicle, anchors, {}, params, rng);
    if (place_track(wall_scene, local, bank.templates[p.template_index], p.anchor, {}, params)) ++wall_accepted;
  }
  bool exhausted = false;
  try {
    sample_trajectories(bank, wall_scene, layout, 1, 3, 1000, params);
  } catch (const ExhaustionError& e) {
    exhausted = e.accepted() == 0;
  }

  const auto open_scene = WorldScene::from_mesh(geometry::make_quad_mesh({-500, -500}, {500, 500}, 0.0),
                                                {make_vehicle(1)});
  int open_accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = draw_placement(bank, ActorClass::kVehicle, anchors, {}, params, rng);
    if (place_track(open_scene, local, bank.templates[p.template_index], p.anchor, {}, params)) ++open_accepted;
  }

  // A crowded street: whatever is accepted must verify clean afterwards.
  const auto street = pipeline::testdata::street_volume(0.4, 80.0);
  const auto street_mesh = geometry::extract_mesh(street);
  const auto busy = WorldScene::from_mesh(street_mesh, {make_vehicle(1), make_vehicle(2), make_pedestrian(3),
                                                        make_vehicle(4), make_pedestrian(5)});
  const auto street_layout = rasterize_map(pipeline::testdata::street_map(80.0), Pose2{}, 160, 80, 0.5);
  world::SamplerParams busy_params;
  busy_params.steps = 10;
  const auto r = sample_trajectories(pipeline::testdata::street_bank(1.0, 0.1), busy, street_layout, 5, 7, 1000,
                                     busy_params);
  const auto verdict = verify_trajectory(busy, r.trajectory, busy_params);

  out.detail << "wall: accepted " << wall_accepted << "/1000 exhausted=" << exhausted << " | open: accepted "
             << open_accepted << "/1000 | street: " << r.accepted << " tracks (ego + 5 actors) in " << r.attempts
             << " attempts, verify=" << (verdict.empty() ? "clean" : verdict) << " ";
  out.check(wall_accepted == 0, "wall-crossing always rejected");
  out.check(exhausted, "sampler exhausts behind the wall");
  out.check(open_accepted == 1000, "open ground always accepted");
  out.check(verdict.empty(), "post-hoc verification");
}

void determinism(Outcome& out) {
  const auto dir = scratch("determinism");
  const std::string cli = LIDARWORLD_CLI;
  out.check(shell(cli + " gen-testdata --out-dir " + (dir / "data").string()) == 0, "gen-testdata");
  const std::string base = cli + " simulate --config " + (dir / "data" / "simulate.json").string() + " --seed 7";
  int rc = 0;
  rc |= shell(base + " --threads 1 --out-dir " + (dir / "a").string());
  rc |= shell(base + " --threads 1 --out-dir " + (dir / "b").string());
  rc |= shell(base + " --threads 8 --out-dir " + (dir / "c").string());
  out.check(rc == 0, "simulate exits 0");
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const auto ref = slurp(e.path());
    for (const char* other : {"b", "c"}) {
      const auto p = dir / other / e.path().filename();
      if (!fs::exists(p) || slurp(p) != ref) ++differing;
    }
    ++files;
  }
  for (const char* other : {"b", "c"})
    if (std::distance(fs::directory_iterator(dir / other), fs::directory_iterator{}) !=
        static_cast<std::ptrdiff_t>(files))
      ++differing;
  out.detail << "files=" << files << " runs=3 (threads 1,1,8) differing=" << differing << " ";
  out.check(files > 10, "artifacts written");
  out.check(differing == 0, "byte-identical artifacts");
}

}  // namespace

int main() {
  criterion("raycast_oracle", 5, raycast_oracle);
  criterion("analytic_plane_scan", 1, plane_scan);
  criterion("marching_cubes_sphere", 1, mc_sphere);
  criterion("cfg_gaussian_sampling", 60, cfg_gaussian);
  criterion("gumbel_sigmoid_calibration", 5, gumbel_calibration);
  criterion("metric_identities", 4, metric_identities);
  criterion("icp_recovery", 30, icp_recovery);
  criterion("temporal_self_consistency", 60, temporal_consistency);
  criterion("rejective_sampling", 30, rejective_sampling);
  criterion("end_to_end_determinism", 120, determinism);
  fs::remove_all(fs::temp_directory_path() / ("lidarworld_accept_" + std::to_string(::getpid())));
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
