// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/diffusion/sampling.hpp"

#include <cmath>

#include "lidarworld/core/error.hpp"
#include "lidarworld/core/parallel.hpp"
#include "lidarworld/simd/kernels.hpp"

namespace lidarworld::diffusion {

namespace {

constexpr std::uint64_t kChainStream = 0xC4A1;

Latent gaussian(const std::vector<std::size_t>& shape, double scale, Rng& rng) {
  Latent z = Latent::zeros(shape);
  for (auto& v : z.values) v = scale * rng.normal();
  return z;
}

void check_schedule_index(const NoiseSchedule& sched, std::size_t k) {
  if (k < 1 || k > sched.levels()) throw InvalidArgument("diffusion step index out of range");
}

}  // namespace

Latent cfg_score(const ScoreModel& m, const Latent& z, std::size_t k, const Latent* c, double w) {
  if (!c && w != 0.0) throw InvalidArgument("guidance needs a condition");
  Latent cond = m.evaluate(z, k, c);
  if (!cond.same_shape(z)) throw InvalidArgument("model output shape differs from its input");
  if (w == 0.0) return cond;
  const Latent uncond = m.evaluate(z, k, nullptr);
  if (!uncond.same_shape(z)) throw InvalidArgument("model output shape differs from its input");
  for (std::size_t i = 0; i < cond.size(); ++i) cond.values[i] = (1.0 + w) * cond.values[i] - w * uncond.values[i];
  return cond;
}

Latent as_score(Latent out, Convention conv, const NoiseSchedule& sched, std::size_t k) {
  if (conv == Convention::kScore) return out;
  check_schedule_index(sched, k);
  const double s = sched.sigma(k);
  for (auto& v : out.values) v = -v / s;
  return out;
}

Latent langevin_step(const Latent& z, const Latent& score, double lambda, std::span<const double> eps) {
  if (!z.same_shape(score) || eps.size() != z.size()) throw InvalidArgument("Langevin step shape mismatch");
  if (!(lambda > 0.0)) throw InvalidArgument("Langevin step size must be positive");
  Latent out = Latent::zeros(z.shape);
  simd::active().scaled_add(out.values.data(), z.values.data(), 0.5 * lambda, score.values.data(), std::sqrt(lambda),
                            eps.data(), z.size());
  return out;
}

Latent langevin_step(const Latent& z, const Latent& score, double lambda, Rng& rng) {
  std::vector<double> eps(z.size());
  for (auto& e : eps) e = rng.normal();
  return langevin_step(z, score, lambda, eps);
}

Latent sample_langevin(const ScoreModel& m, const NoiseSchedule& sched, const Latent* c, double w,
                       std::size_t steps_per_level, Rng& rng) {
  sched.validate();
  if (steps_per_level < 1) throw InvalidArgument("steps_per_level must be at least 1");
  Latent z = gaussian(m.latent_shape(), sched.sigma(sched.levels()), rng);
  for (std::size_t k = sched.levels(); k >= 1; --k)
    for (std::size_t s = 0; s < steps_per_level; ++s)
      z = langevin_step(z, as_score(cfg_score(m, z, k, c, w), m.convention(), sched, k), sched.lambda(k), rng);
  return z;
}

Latent euler_from(const ScoreModel& m, const NoiseSchedule& sched, const Latent* c, double w, Latent z) {
  sched.validate();
  for (std::size_t k = sched.levels(); k >= 1; --k) {
    const double sk = sched.sigma(k);
    const double prev = k > 1 ? sched.sigma(k - 1) : 0.0;
    const Latent score = as_score(cfg_score(m, z, k, c, w), m.convention(), sched, k);
    const double h = (sk - prev) * sk;
    for (std::size_t i = 0; i < z.size(); ++i) z.values[i] += h * score.values[i];
  }
  return z;
}

Latent sample_euler(const ScoreModel& m, const NoiseSchedule& sched, const Latent* c, double w, Rng& rng) {
  sched.validate();
  return euler_from(m, sched, c, w, gaussian(m.latent_shape(), sched.sigma(sched.levels()), rng));
}

std::vector<Latent> sample_chains(const ScoreModel& m, const NoiseSchedule& sched, const Latent* c, double w,
                                  Sampler sampler, std::size_t steps_per_level, std::size_t n_chains,
                                  std::uint64_t seed, int threads) {
  std::vector<Latent> out(n_chains);
  parallel_for(n_chains, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = Rng::substream(seed, kChainStream, i);
      out[i] = sampler == Sampler::kLangevin ? sample_langevin(m, sched, c, w, steps_per_level, rng)
                                             : sample_euler(m, sched, c, w, rng);
    }
  });
  return out;
}

Latent forward_diffuse(const Latent& z0, std::size_t k, const NoiseSchedule& sched, Rng& rng) {
  check_schedule_index(sched, k);
  const double s = sched.sigma(k);
  Latent z = z0;
  for (auto& v : z.values) v += s * rng.normal();
  return z;
}

double score_matching_loss(const ScoreModel& m, const Latent& z0, const Latent* c, const NoiseSchedule& sched,
                           Rng& rng, std::size_t n_samples) {
  sched.validate();
  if (n_samples < 1) throw InvalidArgument("score matching needs at least one sample");
  double total = 0.0;
  std::vector<double> eps(z0.size());
  for (std::size_t n = 0; n < n_samples; ++n) {
    const std::size_t k = 1 + rng.index(sched.levels());
    const double s = sched.sigma(k);
    Latent zk = z0;
    for (std::size_t i = 0; i < zk.size(); ++i) {
      eps[i] = rng.normal();
      zk.values[i] += s * eps[i];
    }
    const Latent out = m.evaluate(zk, k, c);
    if (!out.same_shape(z0)) throw InvalidArgument("model output shape differs from its input");
    const double to_eps = m.convention() == Convention::kEpsilon ? 1.0 : -s;
    double sq = 0.0;
    for (std::size_t i = 0; i < zk.size(); ++i) {
      const double d = eps[i] - to_eps * out.values[i];
      sq += d * d;
    }
    total += sq;
  }
  return total / static_cast<double>(n_samples);
}

}  // namespace lidarworld::diffusion
