// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lidarworld/core/pose.hpp"
#include "lidarworld/world/layout.hpp"

namespace lidarworld::metrics {

/// Top-down occupancy grid. Cell (i, j) covers
/// [-extent + i*res, -extent + (i+1)*res) in x and likewise in y, with
/// res = 2*extent/grid. counts holds 0/1 for a single scan and sums when
/// histograms are aggregated. Row-major, x fastest.
struct BevHistogram {
  std::size_t grid = 100;
  double extent = 50.0;
  std::vector<double> counts;

  BevHistogram() = default;
  BevHistogram(std::size_t grid, double extent);

  double resolution() const { return 2.0 * extent / static_cast<double>(grid); }
  std::size_t index(std::size_t i, std::size_t j) const { return j * grid + i; }
  double total() const;
  void validate() const;
};

struct BevParams {
  std::size_t grid = 100;
  double extent = 50.0;
  double z_min = -3.0;  ///< points outside [z_min, z_max] are ignored
  double z_max = 5.0;
};

/// Occupancy of the points' cells; a cell is 1 iff at least one point in the
/// z slab falls inside it. Frame is taken as given (ego or sensor).
BevHistogram bev_histogram(const std::vector<Vec3>& points, const BevParams& params = {});

/// Cellwise sum. All inputs must share grid and extent.
BevHistogram aggregate(std::span<const BevHistogram> hists);

/// Median pairwise Euclidean distance between the normalized histograms of
/// A and B pooled together; 1 when that median is 0.
double median_bandwidth(std::span<const BevHistogram> a, std::span<const BevHistogram> b);

/// Squared MMD with a Gaussian kernel over normalized histograms, clamped at
/// 0. Within-set terms use the unbiased estimator for sets of two or more and
/// fall back to the V-statistic (diagonal included) for singletons.
double mmd(std::span<const BevHistogram> a, std::span<const BevHistogram> b, double bandwidth);

/// Jensen-Shannon divergence in nats between two normalized count vectors.
double jsd(std::span<const double> p, std::span<const double> q);
double jsd(const BevHistogram& a, const BevHistogram& b);

/// Single-channel "occupied" layout for inspection with LAYO tools.
world::SemanticLayout to_layout(const BevHistogram& h);

}  // namespace lidarworld::metrics
