// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "lidarworld/core/pose.hpp"
#include "lidarworld/metrics/kdtree.hpp"

namespace lidarworld::metrics {

/// Unit normals from the smallest-eigenvalue eigenvector of each point's
/// k-nearest-neighbour covariance (the point itself included, plus any
/// point tied with the k-th within a relative 1e-9), flipped to face
/// `viewpoint`.
std::vector<Vec3> estimate_normals(const std::vector<Vec3>& points, std::size_t k = 10,
                                   const Vec3& viewpoint = Vec3::Zero(), int threads = 1);

/// Target cloud with normals and a search index, reusable across queries.
struct PlaneTarget {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  KdTree tree;

  PlaneTarget(std::vector<Vec3> points, std::vector<Vec3> normals);
  /// Estimates normals with estimate_normals(points, k, viewpoint).
  static PlaneTarget build(std::vector<Vec3> points, std::size_t k = 10, const Vec3& viewpoint = Vec3::Zero());
};

/// |n_j . (p - q_j)| for each source point against its nearest target q_j.
std::vector<double> point_to_plane(const std::vector<Vec3>& src, const PlaneTarget& tgt);
std::vector<double> point_to_plane(const std::vector<Vec3>& src, const std::vector<Vec3>& tgt,
                                   const std::vector<Vec3>& tgt_normals);

struct IcpParams {
  int max_iters = 50;
  double tol = 1e-10;                ///< stop when mean energy improves by less than this
  double max_correspondence = 1.0;   ///< pairs farther apart are ignored (meters)
  std::size_t normal_neighbors = 10;
  double min_eigen_ratio = 1e-9;     ///< smallest/largest normal-matrix eigenvalue floor
};

struct IcpResult {
  Pose pose;           ///< maps source into the target frame
  double energy = 0;   ///< mean point-to-plane distance over final correspondences
  int iterations = 0;
  std::size_t correspondences = 0;
};

/// Point-to-plane ICP with a small-angle linearized solve about the source
/// centroid. Throws ConvergenceError when the normal matrix is rank-deficient
/// or no correspondences remain.
IcpResult icp_align(const std::vector<Vec3>& src, const PlaneTarget& tgt, const Pose& init = Pose::identity(),
                    const IcpParams& params = {});
IcpResult icp_align(const std::vector<Vec3>& src, const std::vector<Vec3>& tgt, const Pose& init = Pose::identity(),
                    const IcpParams& params = {});

struct ConsistencyReport {
  double total_energy = 0.0;    ///< sum of per-pair mean residuals (meters)
  double average_energy = 0.0;  ///< total over the number of consecutive pairs
  double outlier_percent = 0.0; ///< residuals above tau among all pairs, in percent
  double tau = 0.5;
  std::vector<double> pair_energy;
  std::vector<Pose> relative_poses;  ///< frame t into frame t-1
};

/// ICP between each scan and its predecessor, then residuals of every point
/// of the later scan. `init`, when non-empty, seeds pair t with init[t-1].
ConsistencyReport sequence_consistency(const std::vector<std::vector<Vec3>>& scans, double tau = 0.5,
                                       const IcpParams& params = {}, const std::vector<Pose>& init = {},
                                       int threads = 1);

/// Symmetric mean nearest-neighbour distance.
double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

}  // namespace lidarworld::metrics
