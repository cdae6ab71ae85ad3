// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/sensor/raydrop.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lidarworld/core/error.hpp"

namespace lidarworld::sensor {

std::vector<double> grazing(const RangeImage& r) {
  if (!r.config) throw InvalidArgument("grazing estimate needs the image's lidar config");
  const LidarConfig& cfg = *r.config;
  const bool wrap = cfg.full_circle();
  auto point = [&](std::size_t b, std::size_t a) { return Vec3(cfg.direction(b, a) * r.depth[r.index(b, a)]); };
  std::vector<double> out(r.depth.size(), 0.0);
  for (std::size_t b = 0; b < r.beams; ++b)
    for (std::size_t a = 0; a < r.azimuths; ++a) {
      if (!r.valid(b, a)) continue;
      long ha = -1, vb = -1;
      const std::size_t right = a + 1 < r.azimuths ? a + 1 : (wrap ? 0 : r.azimuths);
      const std::size_t left = a > 0 ? a - 1 : (wrap ? r.azimuths - 1 : r.azimuths);
      if (right < r.azimuths && right != a && r.valid(b, right)) ha = static_cast<long>(right);
      else if (left < r.azimuths && left != a && r.valid(b, left)) ha = static_cast<long>(left);
      if (b + 1 < r.beams && r.valid(b + 1, a)) vb = static_cast<long>(b + 1);
      else if (b > 0 && r.valid(b - 1, a)) vb = static_cast<long>(b - 1);
      if (ha < 0 || vb < 0) continue;
      const Vec3 p = point(b, a);
      const Vec3 n = (point(b, static_cast<std::size_t>(ha)) - p).cross(point(static_cast<std::size_t>(vb), a) - p);
      const double len = n.norm();
      if (!(len > 0.0)) continue;
      out[r.index(b, a)] = 1.0 - std::abs(n.dot(cfg.direction(b, a)) / len);
    }
  return out;
}

std::vector<double> AnalyticRaydrop::probabilities(const RangeImage& r) const {
  const auto g = grazing(r);
  std::vector<double> p(r.depth.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (r.mask[i]) p[i] = 1.0 / (1.0 + std::exp(-(a_ - b_ * r.depth[i] - c_ * g[i])));
  return p;
}

RaydropMode parse_raydrop_mode(std::string_view s) {
  if (s == "none") return RaydropMode::kNone;
  if (s == "bernoulli" || s == "softmax") return RaydropMode::kBernoulli;
  if (s == "gumbel") return RaydropMode::kGumbel;
  throw InvalidArgument("unknown raydrop mode '" + std::string(s) + "'");
}

std::string_view to_string(RaydropMode m) {
  switch (m) {
    case RaydropMode::kNone: return "none";
    case RaydropMode::kBernoulli: return "bernoulli";
    case RaydropMode::kGumbel: return "gumbel";
  }
  return "none";
}

std::vector<std::uint8_t> gumbel_sigmoid_sample(std::span<const double> p, double temperature, Rng& rng,
                                                RaydropMode mode) {
  for (const double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("raydrop probabilities must lie in [0, 1]");
  if (mode == RaydropMode::kGumbel && !(temperature > 0.0))
    throw InvalidArgument("Gumbel temperature must be positive");
  std::vector<std::uint8_t> keep(p.size(), 1);
  if (mode == RaydropMode::kNone) return keep;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (mode == RaydropMode::kBernoulli) {
      keep[i] = rng.uniform() < p[i];
      continue;
    }
    const double logit = p[i] <= 0.0 ? -kInf : p[i] >= 1.0 ? kInf : std::log(p[i]) - std::log1p(-p[i]);
    const double g1 = -std::log(-std::log(rng.uniform_open()));
    const double g2 = -std::log(-std::log(rng.uniform_open()));
    // sigmoid(x) > 0.5 exactly when x > 0.
    keep[i] = (logit + g1 - g2) / temperature > 0.0;
  }
  return keep;
}

std::pair<RangeImage, PointCloud> apply_raydrop(const RangeImage& r, const PointCloud& pc, const RaydropModel& model,
                                                RaydropMode mode, double temperature, Rng& rng) {
  r.validate();
  pc.validate();
  if (!pc.has_pixels()) throw InvalidArgument("raydrop needs per-point pixel indices");
  if (pc.size() != r.valid_count()) throw InvalidArgument("cloud does not match the range image");
  for (std::size_t i = 0; i < pc.size(); ++i)
    if (pc.beam[i] >= r.beams || pc.azimuth[i] >= r.azimuths || !r.valid(pc.beam[i], pc.azimuth[i]))
      throw InvalidArgument("cloud point refers to an invalid pixel");
  if (mode == RaydropMode::kNone) return {r, pc};

  const auto p = model.probabilities(r);
  if (p.size() != r.depth.size()) throw InvalidArgument("raydrop model returned the wrong grid size");
  const auto keep = gumbel_sigmoid_sample(p, temperature, rng, mode);
  RangeImage out = r;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (!keep[i] && out.mask[i]) {
      out.mask[i] = 0;
      out.depth[i] = 0.0;
    }
  std::vector<std::uint8_t> keep_points(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) keep_points[i] = out.valid(pc.beam[i], pc.azimuth[i]);
  return {std::move(out), pc.subset(keep_points)};
}

}  // namespace lidarworld::sensor
