// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <unistd.h>

#include "lidarworld/core/error.hpp"
#include "lidarworld/geometry/marching_cubes.hpp"
#include "lidarworld/metrics/registration.hpp"
#include "lidarworld/pipeline/pipeline.hpp"
#include "lidarworld/pipeline/testdata.hpp"
#include "lidarworld/world/sampler.hpp"
#include "test_util.hpp"

using namespace lidarworld;
using namespace lidarworld::pipeline;
namespace fs = std::filesystem;

namespace {

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lidarworld_pipeline_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
    return dir_ / name;
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_F(PipelineTest, FlatPlaneSingleFrameMatchesPlaneDepth) {
  const double voxel = 0.2;
  geometry::save_tsdf(dir_ / "plane.tsdf", testdata::plane_volume(0.0, voxel, 40.0));
  const auto cfg = parse_pipeline_config(R"({
    "static_scene": {"tsdf": "plane.tsdf"},
    "lidar": {"elevations_deg": [-4, -6, -10, -14, -18, -22, -24], "azimuth_count": 120, "max_range": 120},
    "ego": {"start": [0.3, -0.2, 0], "speed": 0},
    "frames": 1})",
                                         dir_);
  const auto res = run_pipeline(cfg, dir_ / "out");
  ASSERT_EQ(res.frames.size(), 1u);
  const auto& img = res.frames[0].scan.image;
  EXPECT_EQ(img.valid_count(), img.depth.size());
  for (std::size_t b = 0; b < img.beams; ++b)
    for (std::size_t a = 0; a < img.azimuths; ++a)
      EXPECT_NEAR(img.depth[img.index(b, a)], 1.8 / std::sin(-cfg.lidar.elevations[b]), 2 * voxel);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "frame_0000.ply"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "frame_0000.rimg"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "frame_0000_pose.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
  EXPECT_FALSE(fs::exists(dir_ / "out" / ".partial"));
  // What was written is what was computed (up to f32 storage).
  const auto back = sensor::load_range_image(dir_ / "out" / "frame_0000.rimg");
  EXPECT_EQ(back.mask, img.mask);
}

TEST_F(PipelineTest, StaticWorldSequenceIsSelfConsistent) {
  geometry::save_tsdf(dir_ / "street.tsdf", testdata::street_volume(0.4, 80.0));
  const auto cfg = parse_pipeline_config(R"({
    "static_scene": {"tsdf": "street.tsdf"},
    "lidar": {"uniform": {"beams": 32, "fov_top_deg": 2, "fov_bottom_deg": -24.8}, "azimuth_count": 512, "max_range": 60},
    "ego": {"start": [-10, -1.75, 0], "speed": 3},
    "frames": 5, "accumulate": true})",
                                         dir_);
  const auto res = run_pipeline(cfg, dir_ / "out");
  ASSERT_EQ(res.frames.size(), 5u);
  std::vector<std::vector<Vec3>> scans;
  for (const auto& f : res.frames) scans.push_back(f.scan.cloud.points);
  const auto rep = metrics::sequence_consistency(scans, 0.5);
  EXPECT_LT(rep.average_energy, 0.05);
  EXPECT_LT(rep.outlier_percent, 2.0);
  // Ego moves 0.3 m per frame along +x, which ICP recovers.
  for (const auto& p : rep.relative_poses) EXPECT_NEAR(p.translation.x(), 0.3, 0.05);
  const auto acc = sensor::load_ply(dir_ / "out" / "accumulated.ply");
  std::size_t total = 0;
  for (const auto& f : res.frames) total += f.scan.cloud.size();
  EXPECT_EQ(acc.size(), total);
  EXPECT_EQ(acc.frame, sensor::Frame::kWorld);
}

TEST_F(PipelineTest, RerunsAreByteIdenticalAcrossThreadCounts) {
  geometry::save_tsdf(dir_ / "street.tsdf", testdata::street_volume(0.4, 80.0));
  write("map.json", world::dump_vector_map(testdata::street_map()));
  write("bank.json", world::dump_trajectory_bank(testdata::street_bank(0.5, 0.1)));
  const std::string text = R"({
    "static_scene": {"tsdf": "street.tsdf"},
    "layout": {"map": "map.json", "dims": [160, 80], "resolution": 0.5},
    "actors": [{"class": "vehicle"}, {"class": "pedestrian"}],
    "trajectory_bank": "bank.json",
    "lidar": {"uniform": {"beams": 16, "fov_top_deg": 2, "fov_bottom_deg": -24}, "azimuth_count": 256},
    "raydrop": {"mode": "gumbel", "temperature": 0.5},
    "frames": 5, "seed": 7})";
  const auto cfg = parse_pipeline_config(text, dir_);
  const auto a = run_pipeline(cfg, dir_ / "a", 1);
  const auto b = run_pipeline(cfg, dir_ / "b", 4);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path().filename();
    ++files;
  }
  EXPECT_EQ(files, 5u * 3u + 1u);
  EXPECT_EQ(a.manifest.at("frames").size(), 5u);
  EXPECT_GT(a.accepted, 0u);

  // The manifest alone reproduces the run.
  const auto again = load_pipeline_config(dir_ / "a" / "manifest.json");
  run_pipeline(again, dir_ / "c", 2);
  for (const auto& e : fs::directory_iterator(dir_ / "a"))
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "c" / e.path().filename())) << e.path().filename();

  // Sampled tracks are clean when re-verified.
  world::SamplerParams sp;
  sp.steps = 5;
  auto mesh = geometry::extract_mesh(geometry::load_tsdf(dir_ / "street.tsdf"));
  const auto scene = world::WorldScene::from_mesh(std::move(mesh), build_actors(cfg.actors));
  EXPECT_EQ(world::verify_trajectory(scene, a.trajectory, sp), "");
}

TEST_F(PipelineTest, FailuresKeepPartialMarker) {
  geometry::save_tsdf(dir_ / "street.tsdf", testdata::street_volume(0.4, 80.0));
  write("bank.json", world::dump_trajectory_bank(testdata::street_bank(0.5, 0.1)));
  const auto cfg = parse_pipeline_config(R"({
    "static_scene": {"tsdf": "street.tsdf"},
    "actors": [{"class": "vehicle"}, {"class": "vehicle"}],
    "trajectory_bank": "bank.json",
    "lidar": {"uniform": {"beams": 8}, "azimuth_count": 64},
    "frames": 5, "max_attempts": 1})",
                                         dir_);
  try {
    run_pipeline(cfg, dir_ / "out");
    FAIL() << "expected a PipelineError";
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage(), "trajectories");
    EXPECT_FALSE(e.validation());
  }
  const auto note = slurp(dir_ / "out" / ".partial");
  EXPECT_NE(note.find("stage: trajectories"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "manifest.json"));
}

TEST_F(PipelineTest, ConfigValidation) {
  EXPECT_THROW(parse_pipeline_config("{", dir_), FormatError);
  EXPECT_THROW(parse_pipeline_config(R"({"lidar": {}})", dir_), InvalidArgument);
  EXPECT_THROW(parse_pipeline_config(R"({"static_scene": {"tsdf": "x"}, "lidar": {}, "fram": 3})", dir_),
               InvalidArgument);
  auto cfg = parse_pipeline_config(R"({"static_scene": {"tsdf": "missing.tsdf"}, "lidar": {}, "ego": {}})", dir_);
  EXPECT_EQ(cfg.static_scene.path, dir_ / "missing.tsdf");
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  try {
    run_pipeline(cfg, dir_ / "out");
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_TRUE(e.validation());
    EXPECT_EQ(e.stage(), "validate");
  }
  geometry::save_tsdf(dir_ / "p.tsdf", testdata::plane_volume(0.0, 1.0, 5.0));
  cfg = parse_pipeline_config(R"({"static_scene": {"tsdf": "p.tsdf"}, "lidar": {}, "ego": {}, "frames": 0})", dir_);
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = parse_pipeline_config(R"({"static_scene": {"tsdf": "p.tsdf"}, "lidar": {}, "actors": [{}]})", dir_);
  EXPECT_THROW(cfg.validate(), InvalidArgument);  // actors need a bank
}

TEST_F(PipelineTest, DiffusionStaticScene) {
  geometry::VolumeDims dims;
  float voxel = 0;
  std::array<float, 3> origin{};
  write("model.json", testdata::scene_model_json(1e-6, dims, voxel, origin).dump());
  StaticSceneSpec spec;
  spec.kind = StaticSceneSpec::Kind::kDiffusion;
  spec.path = dir_ / "model.json";
  spec.condition = 1;
  spec.dims = dims;
  spec.voxel_size = voxel;
  spec.origin = origin;
  const auto vol = sample_static_volume(spec, 3);
  // Conditioned on the street, the sample sits on the street volume.
  const auto shapes = testdata::street_shapes(40.0);
  const auto want = geometry::analytic_sdf_union(shapes, dims, voxel, Vec3(origin[0], origin[1], origin[2]),
                                                 geometry::kDefaultTruncVoxels * voxel);
  double worst = 0;
  for (std::size_t i = 0; i < want.values().size(); ++i)
    worst = std::max(worst, std::abs(double(vol.values()[i]) - double(want.values()[i])));
  EXPECT_LT(worst, 0.02);
  spec.dims.nz += 1;
  EXPECT_THROW(sample_static_volume(spec, 3), InvalidArgument);
}

TEST_F(PipelineTest, ScanConfig) {
  const auto cfg = parse_scan_config(R"({"scene": {"plane": {"height": -0.5}},
      "lidar": {"uniform": {"beams": 4}, "azimuth_count": 8},
      "ego": {"translation": [1, 2, 0], "rpy_deg": [0, 0, 90]}})",
                                     dir_);
  EXPECT_EQ(cfg.scene, ScanConfig::Scene::kPlane);
  EXPECT_EQ(cfg.plane_height, -0.5);
  EXPECT_NEAR(cfg.ego.yaw(), test::deg(90), 1e-12);
  EXPECT_THROW(parse_scan_config(R"({"scene": {"tsdf": "none.tsdf"}, "lidar": {}})", dir_), InvalidArgument);
}

TEST(FileDigest, KnownValues) {
  const auto p = fs::temp_directory_path() / ("lidarworld_digest_" + std::to_string(::getpid()));
  std::ofstream(p, std::ios::binary) << "a";
  EXPECT_EQ(file_digest(p), "af63dc4c8601ec8c");  // FNV-1a 64 of "a"
  std::ofstream(p, std::ios::binary | std::ios::trunc);
  EXPECT_EQ(file_digest(p), "cbf29ce484222325");
  fs::remove(p);
}
