// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/metrics/registration.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lidarworld/core/error.hpp"
#include "lidarworld/core/parallel.hpp"

namespace lidarworld::metrics {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

std::vector<Vec3> estimate_normals(const std::vector<Vec3>& points, std::size_t k, const Vec3& viewpoint,
                                   int threads) {
  if (k < 3) throw InvalidArgument("estimate_normals: k must be >= 3");
  if (points.size() < k) throw InvalidArgument("estimate_normals: fewer points than neighbours");
  const KdTree tree(points);
  std::vector<Vec3> normals(points.size());
  parallel_for(points.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      // Points tied with the k-th neighbour are all kept, so the neighbourhood
      // does not depend on rounding of exactly symmetric samples.
      const double kth = tree.knn(points[i], k).back().d2;
      const auto nbrs = tree.within(points[i], kth * (1.0 + 1e-9) + 1e-300);
      Vec3 mean = Vec3::Zero();
      for (const auto& nb : nbrs) mean += points[nb.index];
      mean /= static_cast<double>(nbrs.size());
      Mat3 cov = Mat3::Zero();
      for (const auto& nb : nbrs) {
        const Vec3 d = points[nb.index] - mean;
        cov += d * d.transpose();
      }
      const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
      Vec3 n = eig.eigenvectors().col(0).normalized();
      if (n.dot(viewpoint - points[i]) < 0.0) n = -n;
      normals[i] = n;
    }
  });
  return normals;
}

PlaneTarget::PlaneTarget(std::vector<Vec3> p, std::vector<Vec3> n) : points(std::move(p)), normals(std::move(n)) {
  if (points.empty()) throw InvalidArgument("point-to-plane target is empty");
  if (normals.size() != points.size()) throw InvalidArgument("target normals must match target points");
  tree = KdTree(points);
}

PlaneTarget PlaneTarget::build(std::vector<Vec3> points, std::size_t k, const Vec3& viewpoint) {
  auto normals = estimate_normals(points, k, viewpoint);
  return PlaneTarget(std::move(points), std::move(normals));
}

std::vector<double> point_to_plane(const std::vector<Vec3>& src, const PlaneTarget& tgt) {
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto nb = tgt.tree.nearest(src[i]);
    out[i] = std::abs(tgt.normals[nb.index].dot(src[i] - tgt.points[nb.index]));
  }
  return out;
}

std::vector<double> point_to_plane(const std::vector<Vec3>& src, const std::vector<Vec3>& tgt,
                                   const std::vector<Vec3>& tgt_normals) {
  return point_to_plane(src, PlaneTarget(tgt, tgt_normals));
}

namespace {

struct Linearization {
  double energy = 0.0;
  std::size_t count = 0;
  Mat6 h = Mat6::Zero();
  Vec6 g = Vec6::Zero();
  Vec3 centroid = Vec3::Zero();
};

Linearization linearize(const std::vector<Vec3>& src, const PlaneTarget& tgt, const Pose& pose, double max_d2) {
  Linearization lin;
  std::vector<Vec3> moved;
  std::vector<std::size_t> match;
  moved.reserve(src.size());
  match.reserve(src.size());
  for (const auto& p : src) {
    const Vec3 q = pose.apply(p);
    const auto nb = tgt.tree.nearest(q);
    if (nb.d2 > max_d2) continue;
    moved.push_back(q);
    match.push_back(nb.index);
    lin.centroid += q;
  }
  lin.count = moved.size();
  if (lin.count == 0) return lin;
  lin.centroid /= static_cast<double>(lin.count);
  for (std::size_t i = 0; i < moved.size(); ++i) {
    const Vec3& n = tgt.normals[match[i]];
    const double r = n.dot(moved[i] - tgt.points[match[i]]);
    Vec6 j;
    j.head<3>() = (moved[i] - lin.centroid).cross(n);
    j.tail<3>() = n;
    lin.h += j * j.transpose();
    lin.g += j * r;
    lin.energy += std::abs(r);
  }
  lin.energy /= static_cast<double>(lin.count);
  return lin;
}

}  // namespace

IcpResult icp_align(const std::vector<Vec3>& src, const PlaneTarget& tgt, const Pose& init, const IcpParams& params) {
  if (src.size() < 10 || tgt.points.size() < 10) throw InvalidArgument("icp_align: both clouds need >= 10 points");
  if (params.max_iters < 1) throw InvalidArgument("icp_align: max_iters must be >= 1");
  init.validate();
  const double max_d2 = params.max_correspondence * params.max_correspondence;
  IcpResult res;
  res.pose = init;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    const Linearization lin = linearize(src, tgt, res.pose, max_d2);
    if (lin.count < 6) {
      std::ostringstream os;
      os << "icp_align: only " << lin.count << " correspondences within " << params.max_correspondence
         << " m at iteration " << it;
      throw ConvergenceError(os.str(), it, 0.0);
    }
    res.energy = lin.energy;
    res.correspondences = lin.count;
    res.iterations = it;
    if (it == params.max_iters || (it > 0 && prev - lin.energy < params.tol)) break;
    prev = lin.energy;

    const Eigen::SelfAdjointEigenSolver<Mat6> eig(lin.h, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(5);
    if (!(hi > 0.0) || lo < params.min_eigen_ratio * hi) {
      std::ostringstream os;
      os << "icp_align: degenerate geometry at iteration " << it << " (normal-matrix eigenvalues " << lo << " / "
         << hi << ", " << lin.count << " correspondences)";
      throw ConvergenceError(os.str(), it, lo);
    }
    const Vec6 x = lin.h.ldlt().solve(-lin.g);
    const Mat3 r = rotation_from_vector(x.head<3>());
    const Pose step{r, lin.centroid - r * lin.centroid + x.tail<3>()};
    res.pose = step * res.pose;
  }
  return res;
}

IcpResult icp_align(const std::vector<Vec3>& src, const std::vector<Vec3>& tgt, const Pose& init,
                    const IcpParams& params) {
  return icp_align(src, PlaneTarget::build(tgt, params.normal_neighbors), init, params);
}

ConsistencyReport sequence_consistency(const std::vector<std::vector<Vec3>>& scans, double tau,
                                       const IcpParams& params, const std::vector<Pose>& init, int threads) {
  if (scans.size() < 2) throw InvalidArgument("sequence_consistency: need at least two scans");
  if (!(tau > 0.0)) throw InvalidArgument("sequence_consistency: tau must be > 0");
  const std::size_t pairs = scans.size() - 1;
  if (!init.empty() && init.size() != pairs) throw InvalidArgument("sequence_consistency: one init pose per pair");

  ConsistencyReport rep;
  rep.tau = tau;
  rep.pair_energy.assign(pairs, 0.0);
  rep.relative_poses.assign(pairs, Pose::identity());
  std::vector<std::size_t> outliers(pairs, 0), counts(pairs, 0);
  parallel_for(pairs, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto& src = scans[p + 1];
      const auto tgt = PlaneTarget::build(scans[p], params.normal_neighbors);
      const auto fit = icp_align(src, tgt, init.empty() ? Pose::identity() : init[p], params);
      std::vector<Vec3> moved(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) moved[i] = fit.pose.apply(src[i]);
      const auto d = point_to_plane(moved, tgt);
      double sum = 0.0;
      for (const double v : d) {
        sum += v;
        if (v > tau) ++outliers[p];
      }
      rep.pair_energy[p] = sum / static_cast<double>(d.size());
      rep.relative_poses[p] = fit.pose;
      counts[p] = d.size();
    }
  });
  std::size_t n_out = 0, n_all = 0;
  for (std::size_t p = 0; p < pairs; ++p) {
    rep.total_energy += rep.pair_energy[p];
    n_out += outliers[p];
    n_all += counts[p];
  }
  rep.average_energy = rep.total_energy / static_cast<double>(pairs);
  rep.outlier_percent = 100.0 * static_cast<double>(n_out) / static_cast<double>(n_all);
  return rep;
}

double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("chamfer: both clouds must be non-empty");
  auto one_way = [](const std::vector<Vec3>& from, const KdTree& to) {
    double s = 0.0;
    for (const auto& p : from) s += std::sqrt(to.nearest(p).d2);
    return s / static_cast<double>(from.size());
  };
  const KdTree ta(a), tb(b);
  return 0.5 * (one_way(a, tb) + one_way(b, ta));
}

}  // namespace lidarworld::metrics
