// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/metrics/bev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lidarworld/core/error.hpp"

namespace lidarworld::metrics {

BevHistogram::BevHistogram(std::size_t g, double e) : grid(g), extent(e), counts(g * g, 0.0) { validate(); }

double BevHistogram::total() const {
  double s = 0.0;
  for (const double c : counts) s += c;
  return s;
}

void BevHistogram::validate() const {
  if (grid < 1) throw InvalidArgument("BevHistogram: grid must be >= 1");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw InvalidArgument("BevHistogram: extent must be > 0");
  if (counts.size() != grid * grid) throw InvalidArgument("BevHistogram: counts size mismatch");
  for (const double c : counts)
    if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("BevHistogram: counts must be finite and >= 0");
}

BevHistogram bev_histogram(const std::vector<Vec3>& points, const BevParams& params) {
  BevHistogram h(params.grid, params.extent);
  const double res = h.resolution();
  const auto g = static_cast<double>(h.grid);
  for (const auto& p : points) {
    if (!(p.z() >= params.z_min && p.z() <= params.z_max)) continue;
    const double fi = std::floor((p.x() + h.extent) / res);
    const double fj = std::floor((p.y() + h.extent) / res);
    if (!(fi >= 0.0 && fi < g && fj >= 0.0 && fj < g)) continue;
    h.counts[h.index(static_cast<std::size_t>(fi), static_cast<std::size_t>(fj))] = 1.0;
  }
  return h;
}

namespace {

void check_compatible(const BevHistogram& a, const BevHistogram& b) {
  if (a.grid != b.grid || a.extent != b.extent) throw InvalidArgument("BEV histograms differ in grid or extent");
}

std::vector<std::vector<double>> normalized(std::span<const BevHistogram> hs) {
  std::vector<std::vector<double>> out;
  out.reserve(hs.size());
  for (const auto& h : hs) {
    h.validate();
    const double t = h.total();
    auto& v = out.emplace_back(h.counts);
    if (t > 0.0)
      for (auto& x : v) x /= t;
  }
  return out;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void check_sets(std::span<const BevHistogram> a, std::span<const BevHistogram> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("mmd: both histogram sets must be non-empty");
  for (const auto& h : a) check_compatible(h, a.front());
  for (const auto& h : b) check_compatible(h, a.front());
}

}  // namespace

BevHistogram aggregate(std::span<const BevHistogram> hists) {
  if (hists.empty()) throw InvalidArgument("aggregate: no histograms");
  BevHistogram out(hists.front().grid, hists.front().extent);
  for (const auto& h : hists) {
    check_compatible(h, out);
    h.validate();
    for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += h.counts[i];
  }
  return out;
}

double median_bandwidth(std::span<const BevHistogram> a, std::span<const BevHistogram> b) {
  check_sets(a, b);
  auto all = normalized(a);
  for (auto& v : normalized(b)) all.push_back(std::move(v));
  std::vector<double> d;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) d.push_back(std::sqrt(sq_dist(all[i], all[j])));
  if (d.empty()) return 1.0;
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  double m = d[mid];
  if (d.size() % 2 == 0) m = 0.5 * (m + *std::max_element(d.begin(), d.begin() + mid));
  return m > 0.0 ? m : 1.0;
}

double mmd(std::span<const BevHistogram> a, std::span<const BevHistogram> b, double bandwidth) {
  check_sets(a, b);
  if (!(bandwidth > 0.0)) throw InvalidArgument("mmd: bandwidth must be > 0");
  const auto na = normalized(a), nb = normalized(b);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  auto k = [&](const std::vector<double>& x, const std::vector<double>& y) { return std::exp(-sq_dist(x, y) * inv); };

  auto within = [&](const std::vector<std::vector<double>>& s) {
    const auto m = static_cast<double>(s.size());
    if (s.size() == 1) return 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) sum += k(s[i], s[j]);
    return 2.0 * sum / (m * (m - 1.0));
  };
  double cross = 0.0;
  for (const auto& x : na)
    for (const auto& y : nb) cross += k(x, y);
  cross /= static_cast<double>(na.size()) * static_cast<double>(nb.size());
  return std::max(0.0, within(na) + within(nb) - 2.0 * cross);
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidArgument("jsd: size mismatch");
  double tp = 0.0, tq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) throw InvalidArgument("jsd: negative mass");
    tp += p[i];
    tq += q[i];
  }
  if (!(tp > 0.0) || !(tq > 0.0)) throw InvalidArgument("jsd: both inputs need positive total mass");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i] / tp, qi = q[i] / tq;
    if (pi == 0.0 && qi == 0.0) continue;
    const double m = 0.5 * (pi + qi);
    double term = 0.0;
    if (pi > 0.0) term += pi * std::log(pi / m);
    if (qi > 0.0) term += qi * std::log(qi / m);
    s += 0.5 * term;
  }
  return std::clamp(s, 0.0, std::numbers::ln2);
}

double jsd(const BevHistogram& a, const BevHistogram& b) {
  check_compatible(a, b);
  return jsd(std::span<const double>(a.counts), std::span<const double>(b.counts));
}

world::SemanticLayout to_layout(const BevHistogram& h) {
  h.validate();
  world::SemanticLayout l(h.grid, h.grid, static_cast<float>(h.resolution()), {"occupied"});
  const auto c = static_cast<float>(-h.extent + 0.5 * h.resolution());
  l.origin = {c, c};
  for (std::size_t j = 0; j < h.grid; ++j)
    for (std::size_t i = 0; i < h.grid; ++i) l.set(0, i, j, h.counts[h.index(i, j)] > 0.0);
  return l;
}

}  // namespace lidarworld::metrics
