// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lidarworld/core/rng.hpp"
#include "lidarworld/sensor/lidar.hpp"

namespace lidarworld::sensor {

/// Per-pixel probability that a ray returns (drop probability is 1 - p).
class RaydropModel {
 public:
  virtual ~RaydropModel() = default;
  virtual std::vector<double> probabilities(const RangeImage& r) const = 0;
};

/// p = sigmoid(a - b * depth - c * grazing), where grazing = 1 - |cos| of the
/// incidence angle estimated from neighbouring pixels (0 when no neighbours
/// are valid). Invalid pixels get p = 0. Needs the image's config.
class AnalyticRaydrop final : public RaydropModel {
 public:
  AnalyticRaydrop(double a = 4.0, double b = 0.05, double c = 2.0) : a_(a), b_(b), c_(c) {}
  std::vector<double> probabilities(const RangeImage& r) const override;

 private:
  double a_, b_, c_;
};

/// Grazing term per pixel as used by AnalyticRaydrop.
std::vector<double> grazing(const RangeImage& r);

enum class RaydropMode { kNone, kBernoulli, kGumbel };

/// "none", "bernoulli", "softmax" (same as bernoulli) or "gumbel".
RaydropMode parse_raydrop_mode(std::string_view s);
std::string_view to_string(RaydropMode m);

/// Keep mask. Gumbel mode keeps a pixel iff
/// sigmoid((logit p + g1 - g2) / temperature) > 0.5 with g1, g2 ~ Gumbel(0, 1).
/// Pixels are drawn in index order. Throws InvalidArgument for p outside
/// [0, 1] or a non-positive temperature in Gumbel mode.
std::vector<std::uint8_t> gumbel_sigmoid_sample(std::span<const double> p, double temperature, Rng& rng,
                                                RaydropMode mode);

/// Invalidates dropped pixels and removes their points. The cloud must carry
/// pixel indices matching the image's valid pixels.
std::pair<RangeImage, PointCloud> apply_raydrop(const RangeImage& r, const PointCloud& pc, const RaydropModel& model,
                                                RaydropMode mode, double temperature, Rng& rng);

}  // namespace lidarworld::sensor
