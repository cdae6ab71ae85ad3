// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "lidarworld/core/pose.hpp"

namespace lidarworld::metrics {

struct Neighbor {
  std::size_t index = 0;
  double d2 = 0.0;  ///< squared distance

  bool operator<(const Neighbor& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

/// Static 3-d tree over a point set. Leaves hold SoA coordinates scanned with
/// the SIMD nearest kernel; sets of at most kBruteForceLimit points are a
/// single leaf. Ties on distance resolve to the lowest input index, so
/// queries agree exactly with an exhaustive scan.
class KdTree {
 public:
  static constexpr std::size_t kBruteForceLimit = 512;
  static constexpr std::size_t kLeafSize = 16;

  KdTree() = default;
  explicit KdTree(const std::vector<Vec3>& points);

  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }

  /// Closest point to q. Throws InvalidArgument on an empty tree.
  Neighbor nearest(const Vec3& q) const;
  /// Up to k closest points, ordered by (distance, index).
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const;
  /// Every point with squared distance <= r2, ordered by (distance, index).
  std::vector<Neighbor> within(const Vec3& q, double r2) const;

 private:
  struct Node {
    double lo[3], hi[3];
    std::size_t begin, end;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end, const std::vector<Vec3>& points);
  double box_d2(const Node& n, const Vec3& q) const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> index_;  // tree order -> input index
  std::vector<double> xs_, ys_, zs_;
};

}  // namespace lidarworld::metrics
