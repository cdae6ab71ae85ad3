// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lidarworld/core/rng.hpp"
#include "lidarworld/diffusion/model.hpp"

namespace lidarworld::diffusion {

/// (1 + w) * m(z, k, c) - w * m(z, k). Throws InvalidArgument when c is null
/// and w != 0, or when shapes disagree.
Latent cfg_score(const ScoreModel& m, const Latent& z, std::size_t k, const Latent* c, double w);

/// Converts a model output at level k to a score.
Latent as_score(Latent out, Convention conv, const NoiseSchedule& sched, std::size_t k);

/// z + (lambda / 2) * score + sqrt(lambda) * eps with eps ~ N(0, I).
Latent langevin_step(const Latent& z, const Latent& score, double lambda, Rng& rng);
/// Same update with caller-supplied noise (zeros give the deterministic step).
Latent langevin_step(const Latent& z, const Latent& score, double lambda, std::span<const double> eps);

/// Annealed Langevin from z ~ N(0, sigma_K^2 I) down to level 1.
Latent sample_langevin(const ScoreModel& m, const NoiseSchedule& sched, const Latent* c, double w,
                       std::size_t steps_per_level, Rng& rng);

/// Probability-flow Euler: z <- z + (sigma_k - sigma_{k-1}) * sigma_k * score
/// for k = K..1 with sigma_0 = 0; noise only at initialization.
Latent sample_euler(const ScoreModel& m, const NoiseSchedule& sched, const Latent* c, double w, Rng& rng);
/// Euler from a given initial latent.
Latent euler_from(const ScoreModel& m, const NoiseSchedule& sched, const Latent* c, double w, Latent z);

enum class Sampler { kLangevin, kEuler };

/// Independent chains, chain i seeded from the substream (seed, i); results
/// do not depend on `threads`.
std::vector<Latent> sample_chains(const ScoreModel& m, const NoiseSchedule& sched, const Latent* c, double w,
                                  Sampler sampler, std::size_t steps_per_level, std::size_t n_chains,
                                  std::uint64_t seed, int threads = 1);

/// z_0 + sigma_k * eps. Throws InvalidArgument unless 1 <= k <= K.
Latent forward_diffuse(const Latent& z0, std::size_t k, const NoiseSchedule& sched, Rng& rng);

/// Monte Carlo mean of ||eps - eps_hat||^2 over uniform k in [1, K] and
/// eps ~ N(0, I), where eps_hat is the model output read as a noise
/// prediction (score models are converted with eps = -sigma_k * score).
double score_matching_loss(const ScoreModel& m, const Latent& z0, const Latent* c, const NoiseSchedule& sched,
                           Rng& rng, std::size_t n_samples);

}  // namespace lidarworld::diffusion
