// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/metrics/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <limits>

#include "lidarworld/core/error.hpp"
#include "lidarworld/simd/kernels.hpp"

namespace lidarworld::metrics {

KdTree::KdTree(const std::vector<Vec3>& points) {
  index_.resize(points.size());
  std::iota(index_.begin(), index_.end(), std::size_t{0});
  if (points.empty()) return;
  for (const auto& p : points)
    if (!all_finite(p)) throw InvalidArgument("KdTree: non-finite point");
  nodes_.reserve(2 * points.size() / kLeafSize + 2);
  build(0, points.size(), points);
  xs_.resize(points.size());
  ys_.resize(points.size());
  zs_.resize(points.size());
  for (std::size_t i = 0; i < index_.size(); ++i) {
    const Vec3& p = points[index_[i]];
    xs_[i] = p.x();
    ys_[i] = p.y();
    zs_[i] = p.z();
  }
}

int KdTree::build(std::size_t begin, std::size_t end, const std::vector<Vec3>& points) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Node node;
  node.begin = begin;
  node.end = end;
  for (int k = 0; k < 3; ++k) {
    node.lo[k] = points[index_[begin]][k];
    node.hi[k] = node.lo[k];
  }
  for (std::size_t i = begin; i < end; ++i)
    for (int k = 0; k < 3; ++k) {
      node.lo[k] = std::min(node.lo[k], points[index_[i]][k]);
      node.hi[k] = std::max(node.hi[k], points[index_[i]][k]);
    }
  const std::size_t n = end - begin;
  const bool leaf = (id == 0 && n <= kBruteForceLimit) || n <= kLeafSize;
  if (leaf) {
    // Ascending input order inside a leaf lets the kernel's lowest-position
    // tie rule coincide with the lowest-index rule.
    std::sort(index_.begin() + begin, index_.begin() + end);
    nodes_[id] = node;
    return id;
  }
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (node.hi[k] - node.lo[k] > node.hi[axis] - node.lo[axis]) axis = k;
  const std::size_t mid = begin + n / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     const double pa = points[a][axis], pb = points[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  node.left = build(begin, mid, points);
  node.right = build(mid, end, points);
  nodes_[id] = node;
  return id;
}

double KdTree::box_d2(const Node& n, const Vec3& q) const {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = std::max({n.lo[k] - q[k], 0.0, q[k] - n.hi[k]});
    d2 += d * d;
  }
  return d2;
}

Neighbor KdTree::nearest(const Vec3& q) const {
  if (empty()) throw InvalidArgument("KdTree::nearest on an empty tree");
  const auto& kernels = simd::active();
  const double qa[3] = {q.x(), q.y(), q.z()};
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  bool found = false;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (found && box_d2(n, q) > best.d2) continue;
    if (n.left < 0) {
      double d2 = 0.0;
      const std::size_t pos =
          n.begin + kernels.nearest(qa, &xs_[n.begin], &ys_[n.begin], &zs_[n.begin], n.end - n.begin, &d2);
      const Neighbor cand{index_[pos], d2};
      if (!found || cand < best) best = cand;
      found = true;
      continue;
    }
    // Push the farther child first so the nearer one is searched first.
    const double dl = box_d2(nodes_[n.left], q), dr = box_d2(nodes_[n.right], q);
    if (dl <= dr) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return best;
}

std::vector<Neighbor> KdTree::knn(const Vec3& q, std::size_t k) const {
  std::vector<Neighbor> heap;  // max-heap on (d2, index)
  if (k == 0 || empty()) return heap;
  heap.reserve(k + 1);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (heap.size() == k && box_d2(n, q) > heap.front().d2) continue;
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const double dx = xs_[i] - q.x();
        const double dy = ys_[i] - q.y();
        const double dz = zs_[i] - q.z();
        const Neighbor cand{index_[i], dx * dx + dy * dy + dz * dz};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      continue;
    }
    const double dl = box_d2(nodes_[n.left], q), dr = box_d2(nodes_[n.right], q);
    if (dl <= dr) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

std::vector<Neighbor> KdTree::within(const Vec3& q, double r2) const {
  std::vector<Neighbor> out;
  if (empty()) return out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (box_d2(n, q) > r2) continue;
    if (n.left >= 0) {
      stack.push_back(n.left);
      stack.push_back(n.right);
      continue;
    }
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const double dx = xs_[i] - q.x();
      const double dy = ys_[i] - q.y();
      const double dz = zs_[i] - q.z();
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (d2 <= r2) out.push_back({index_[i], d2});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lidarworld::metrics
