// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "lidarworld/core/error.hpp"
#include "lidarworld/world/layout.hpp"
#include "test_util.hpp"

using namespace lidarworld;
using namespace lidarworld::world;

TEST(Layout, DefaultClasses) {
  SemanticLayout l(4, 3, 0.5f, default_class_names());
  EXPECT_EQ(l.channels(), 5u);
  EXPECT_EQ(l.class_names[0], "lane markings");
  EXPECT_EQ(l.class_names[4], "driveways");
  EXPECT_THROW(SemanticLayout(0, 3, 0.5f, default_class_names()), InvalidArgument);
  EXPECT_THROW(SemanticLayout(2, 3, 0.0f, default_class_names()), InvalidArgument);
}

TEST(Layout, EmptyMapIsAllFalse) {
  const auto l = rasterize_map(VectorMap{}, {3.0, -2.0, 0.4}, 17, 9, 0.5);
  for (std::size_t c = 0; c < l.channels(); ++c) EXPECT_EQ(l.count(c), 0u);
}

TEST(Layout, AxisAlignedPolylineCoversOneRow) {
  // 11 x 9 cells of 1 m centered on the origin: cell (i, j) sits at (i - 5, j - 4).
  VectorMap map;
  map.polylines.push_back({1, {{-3.2, 0.0}, {2.7, 0.0}}});
  const auto l = rasterize_map(map, {0.0, 0.0, 0.0}, 11, 9, 1.0);
  // Covered cells by hand: centers x = -3 .. 3 lie within 0.5 of [-3.2, 2.7];
  // rows 3 and 5 are 1 m away.
  for (std::size_t j = 0; j < 9; ++j)
    for (std::size_t i = 0; i < 11; ++i) {
      const bool expected = j == 4 && i >= 2 && i <= 8;
      EXPECT_EQ(l.at(1, i, j), expected) << i << "," << j;
    }
  EXPECT_EQ(l.count(0), 0u);
  EXPECT_EQ(l.count(1), 7u);
}

TEST(Layout, RotatedCenterAlignsRows) {
  const double h = test::deg(30);
  const Vec2 c{10.0, 4.0};
  const Vec2 along{std::cos(h), std::sin(h)};
  VectorMap map;
  map.polylines.push_back({0, {c - 2.1 * along, c + 2.1 * along}});
  const auto l = rasterize_map(map, {c.x(), c.y(), h}, 7, 5, 1.0);
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(l.at(0, i, j), j == 2 && i >= 1 && i <= 5) << i << "," << j;
  const Vec2 mid = l.cell_center(3, 2);
  EXPECT_NEAR(mid.x(), c.x(), 1e-5);
  EXPECT_NEAR(mid.y(), c.y(), 1e-5);
}

namespace {

VectorMap random_dyadic_map(Rng& rng, int n) {
  VectorMap map;
  for (int p = 0; p < n; ++p) {
    Polyline pl;
    pl.class_id = static_cast<int>(rng.index(5));
    const int pts = 2 + static_cast<int>(rng.index(4));
    for (int k = 0; k < pts; ++k)
      pl.points.emplace_back(static_cast<double>(rng.index(320)) / 8.0 - 20.0,
                             static_cast<double>(rng.index(320)) / 8.0 - 20.0);
    map.polylines.push_back(std::move(pl));
  }
  return map;
}

}  // namespace

TEST(Layout, ShiftEquivariantAndIdempotent) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorMap map = random_dyadic_map(rng, 12);
    const double res = 0.5;
    const int sx = static_cast<int>(rng.index(9)) - 4, sy = static_cast<int>(rng.index(9)) - 4;
    const Pose2 a{0.0, 0.0, 0.0};
    const Pose2 b{sx * res, sy * res, 0.0};
    const auto la = rasterize_map(map, a, 41, 37, res);
    const auto lb = rasterize_map(map, b, 41, 37, res);
    EXPECT_EQ(la, rasterize_map(map, a, 41, 37, res));
    std::size_t compared = 0;
    for (std::size_t c = 0; c < 5; ++c)
      for (int j = 0; j < 37; ++j)
        for (int i = 0; i < 41; ++i) {
          const int ia = i + sx, ja = j + sy;
          if (ia < 0 || ja < 0 || ia >= 41 || ja >= 37) continue;
          ASSERT_EQ(lb.at(c, i, j), la.at(c, ia, ja));
          ++compared;
        }
    EXPECT_GT(compared, 0u);
  }
}

TEST(Layout, BinaryRoundTrip) {
  Rng rng(3);
  auto l = rasterize_map(random_dyadic_map(rng, 8), {1.25, -0.5, 0.3}, 23, 19, 0.4);
  std::stringstream ss;
  write_layout(ss, l);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "LAYO");
  EXPECT_EQ(bytes.size(), 4u + 4 * 4 + 4 * 4 + 23 * 19 * 5);
  const auto back = read_layout(ss);
  EXPECT_EQ(back, l);
  std::stringstream again;
  write_layout(again, back);
  EXPECT_EQ(again.str(), bytes);

  std::stringstream bad(std::string("TSDF") + bytes.substr(4));
  EXPECT_THROW(read_layout(bad), FormatError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 7));
  EXPECT_THROW(read_layout(truncated), FormatError);
}

TEST(Layout, JsonParsing) {
  const auto map = parse_vector_map(R"({"polylines": [
      {"class": "crosswalks", "points": [[0, 0], [1, 2]]},
      {"class": 1, "points": [[0, 0], [3, 0], [3, 3]]}]})");
  ASSERT_EQ(map.polylines.size(), 2u);
  EXPECT_EQ(map.polylines[0].class_id, 3);
  EXPECT_EQ(map.polylines[1].class_id, 1);
  EXPECT_EQ(map.polylines[1].points[2], Vec2(3, 3));
  const auto again = parse_vector_map(dump_vector_map(map));
  ASSERT_EQ(again.polylines.size(), 2u);
  EXPECT_EQ(again.polylines[0].points, map.polylines[0].points);
  EXPECT_EQ(again.polylines[1].class_id, 1);

  EXPECT_THROW(parse_vector_map(R"({"polylines": [{"class": "trees", "points": [[0,0],[1,1]]}]})"),
               InvalidArgument);
  EXPECT_THROW(parse_vector_map(R"({"polylines": [{"class": 0, "points": [[0,0]]}]})"), InvalidArgument);
  EXPECT_THROW(parse_vector_map(R"({"polylines": [{"class": 9, "points": [[0,0],[1,1]]}]})"), InvalidArgument);
  EXPECT_THROW(parse_vector_map("{not json"), FormatError);
}
