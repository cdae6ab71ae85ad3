// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "lidarworld/diffusion/latent.hpp"

namespace lidarworld::diffusion {

/// Noise levels sigma_1 < ... < sigma_K and Langevin step sizes lambda_k,
/// both indexed from 1.
struct NoiseSchedule {
  std::vector<double> sigmas;   ///< sigmas[k - 1] = sigma_k
  std::vector<double> lambdas;  ///< lambdas[k - 1] = lambda_k

  std::size_t levels() const { return sigmas.size(); }
  double sigma(std::size_t k) const { return sigmas.at(k - 1); }
  double lambda(std::size_t k) const { return lambdas.at(k - 1); }

  /// Geometric spacing from sigma_min (k = 1) to sigma_max (k = K), with
  /// lambda_k = eta * sigma_k^2.
  static NoiseSchedule geometric(double sigma_max = 80.0, double sigma_min = 0.01, std::size_t levels = 100,
                                 double eta = 1.0);
  /// Throws InvalidArgument unless K >= 1, all lambda_k > 0, all sigma_k > 0
  /// and sigma is non-decreasing in k.
  void validate() const;
};

/// What a model's output means. Epsilon models predict the injected noise;
/// the samplers convert with score = -epsilon / sigma_k.
enum class Convention { kScore, kEpsilon };

/// Denoising network interface. `c == nullptr` requests the unconditional
/// output. Implementations must allow concurrent evaluate calls.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual Latent evaluate(const Latent& z, std::size_t k, const Latent* c) const = 0;
  virtual Convention convention() const { return Convention::kScore; }
  virtual std::vector<std::size_t> latent_shape() const = 0;
};

/// Analytic model for Gaussian data N(mu, s^2 I) with one mean per
/// condition. Condition codes are rank-1 latents of length one holding the
/// condition id (see condition_code). Without a schedule the score is
/// -(z - mu) / s^2. With one, level k uses the score of the data convolved
/// with the level's noise, -(z - mu) / (s^2 + sigma_k^2); level 0 is clean.
class GaussianScoreModel final : public ScoreModel {
 public:
  struct Condition {
    long id = 0;
    std::vector<double> mean;
  };

  GaussianScoreModel(std::vector<double> unconditional_mean, double variance, std::vector<Condition> conditions = {});

  Latent evaluate(const Latent& z, std::size_t k, const Latent* c) const override;
  std::vector<std::size_t> latent_shape() const override { return {dim()}; }

  std::size_t dim() const { return unconditional_mean_.size(); }
  double variance() const { return variance_; }
  const std::vector<double>& mean(const Latent* c) const;
  void bind_schedule(const NoiseSchedule& sched) { sigmas_ = sched.sigmas; }

 private:
  std::vector<double> unconditional_mean_;
  double variance_;
  std::vector<Condition> conditions_;
  std::vector<double> sigmas_;
};

Latent condition_code(long id);

// JSON: {"variance": 1.0, "unconditional_mean": [...],
//        "conditions": [{"id": 0, "mean": [...]}]}
GaussianScoreModel parse_gaussian_model(std::string_view json);
GaussianScoreModel load_gaussian_model(const std::filesystem::path& path);

}  // namespace lidarworld::diffusion
