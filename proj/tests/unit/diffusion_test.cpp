// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "lidarworld/core/error.hpp"
#include "lidarworld/diffusion/codec.hpp"
#include "lidarworld/diffusion/sampling.hpp"
#include "test_util.hpp"

using namespace lidarworld;
using namespace lidarworld::diffusion;

namespace {

GaussianScoreModel cfg_model(std::size_t dim, double mu_c) {
  return GaussianScoreModel(std::vector<double>(dim, 0.0), 1.0, {{1, std::vector<double>(dim, mu_c)}});
}

Latent random_latent(std::size_t dim, Rng& rng) {
  Latent z = Latent::zeros({dim});
  for (auto& v : z.values) v = rng.uniform(-3, 3);
  return z;
}

struct Moments {
  double mean = 0.0, var = 0.0;
};

Moments coordinate_moments(const std::vector<Latent>& xs, std::size_t i) {
  Moments m;
  for (const auto& x : xs) m.mean += x.values[i];
  m.mean /= static_cast<double>(xs.size());
  for (const auto& x : xs) m.var += (x.values[i] - m.mean) * (x.values[i] - m.mean);
  m.var /= static_cast<double>(xs.size() - 1);
  return m;
}

// One-sample Kolmogorov-Smirnov p-value against N(mu, 1), asymptotic series.
double ks_pvalue(std::vector<double> xs, double mu) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 0.5 * std::erfc(-(xs[i] - mu) / std::sqrt(2.0));
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) p += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// Unconditional zero output: the score of nothing.
class ZeroModel final : public ScoreModel {
 public:
  explicit ZeroModel(std::size_t dim, Convention conv = Convention::kScore) : dim_(dim), conv_(conv) {}
  Latent evaluate(const Latent&, std::size_t, const Latent*) const override { return Latent::zeros({dim_}); }
  Convention convention() const override { return conv_; }
  std::vector<std::size_t> latent_shape() const override { return {dim_}; }

 private:
  std::size_t dim_;
  Convention conv_;
};

// Epsilon-convention view of a score model at the schedule's levels.
class EpsilonView final : public ScoreModel {
 public:
  EpsilonView(const ScoreModel& inner, const NoiseSchedule& sched) : inner_(inner), sched_(sched) {}
  Latent evaluate(const Latent& z, std::size_t k, const Latent* c) const override {
    Latent out = inner_.evaluate(z, k, c);
    for (auto& v : out.values) v *= -sched_.sigma(k);
    return out;
  }
  Convention convention() const override { return Convention::kEpsilon; }
  std::vector<std::size_t> latent_shape() const override { return inner_.latent_shape(); }

 private:
  const ScoreModel& inner_;
  const NoiseSchedule& sched_;
};

// Returns exactly the noise that produced z_k from a known z_0.
class PerfectEpsilon final : public ScoreModel {
 public:
  PerfectEpsilon(Latent z0, const NoiseSchedule& sched) : z0_(std::move(z0)), sched_(sched) {}
  Latent evaluate(const Latent& z, std::size_t k, const Latent*) const override {
    Latent out = z;
    for (std::size_t i = 0; i < z.size(); ++i) out.values[i] = (z.values[i] - z0_.values[i]) / sched_.sigma(k);
    return out;
  }
  Convention convention() const override { return Convention::kEpsilon; }
  std::vector<std::size_t> latent_shape() const override { return z0_.shape; }

 private:
  Latent z0_;
  const NoiseSchedule& sched_;
};

}  // namespace

TEST(Schedule, GeometricDefaults) {
  const auto s = NoiseSchedule::geometric();
  ASSERT_EQ(s.levels(), 100u);
  EXPECT_DOUBLE_EQ(s.sigma(1), 0.01);
  EXPECT_DOUBLE_EQ(s.sigma(100), 80.0);
  for (std::size_t k = 2; k <= 100; ++k) {
    EXPECT_GT(s.sigma(k), s.sigma(k - 1));
    EXPECT_NEAR(s.sigma(k) / s.sigma(k - 1), std::pow(8000.0, 1.0 / 99.0), 1e-12);
    EXPECT_DOUBLE_EQ(s.lambda(k), s.sigma(k) * s.sigma(k));
  }
  NoiseSchedule bad = s;
  bad.lambdas[3] = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = s;
  std::swap(bad.sigmas[4], bad.sigmas[5]);
  EXPECT_THROW(bad.validate(), InvalidArgument);
  EXPECT_THROW(NoiseSchedule::geometric(1.0, 2.0, 10, 1.0), InvalidArgument);
  EXPECT_EQ(NoiseSchedule::geometric(3.0, 0.5, 1, 1.0).sigma(1), 3.0);
}

TEST(Cfg, GuidanceOffIsConditionalOutput) {
  Rng rng(1);
  const auto m = cfg_model(8, 2.0);
  const auto c = condition_code(1);
  const auto z = random_latent(8, rng);
  EXPECT_EQ(cfg_score(m, z, 0, &c, 0.0), m.evaluate(z, 0, &c));
  EXPECT_THROW(cfg_score(m, z, 0, nullptr, 0.5), InvalidArgument);
  EXPECT_NO_THROW(cfg_score(m, z, 0, nullptr, 0.0));
}

TEST(Cfg, GaussianClosedForm) {
  Rng rng(2);
  std::vector<double> mu_u(5), mu_c(5);
  for (std::size_t i = 0; i < 5; ++i) {
    mu_u[i] = rng.uniform(-2, 2);
    mu_c[i] = rng.uniform(-2, 2);
  }
  const double var = 0.7;
  const GaussianScoreModel m(mu_u, var, {{3, mu_c}});
  const auto c = condition_code(3);
  for (double w : {-0.5, 0.0, 0.5, 1.0, 3.7}) {
    const auto z = random_latent(5, rng);
    const auto s = cfg_score(m, z, 0, &c, w);
    for (std::size_t i = 0; i < 5; ++i) {
      const double combined_mean = (1 + w) * mu_c[i] - w * mu_u[i];
      EXPECT_NEAR(s.values[i], -(z.values[i] - combined_mean) / var, 1e-12);
    }
  }
}

TEST(Cfg, ConditionIgnoredMeansGuidanceIrrelevant) {
  Rng rng(3);
  const ZeroModel zero(4);
  const GaussianScoreModel same(std::vector<double>(4, 1.5), 2.0, {{0, std::vector<double>(4, 1.5)}});
  const auto c = condition_code(0);
  const auto z = random_latent(4, rng);
  const auto base = cfg_score(same, z, 0, &c, 0.0);
  for (double w : {0.3, 2.0, 10.0}) {
    const auto s = cfg_score(same, z, 0, &c, w);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s.values[i], base.values[i], 1e-12);
    EXPECT_EQ(cfg_score(zero, z, 0, &c, w), Latent::zeros({4}));
  }
}

TEST(Cfg, LinearInGuidanceScale) {
  Rng rng(4);
  const auto m = cfg_model(6, -1.0);
  const auto c = condition_code(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto z = random_latent(6, rng);
    const double w1 = rng.uniform(-2, 4), w2 = rng.uniform(-2, 4);
    const auto a = cfg_score(m, z, 0, &c, w1), b = cfg_score(m, z, 0, &c, w2);
    const auto o = cfg_score(m, z, 0, &c, 0.0), ab = cfg_score(m, z, 0, &c, w1 + w2);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(a.values[i] + b.values[i] - o.values[i], ab.values[i], 1e-9);
  }
}

TEST(Langevin, StepArithmetic) {
  Rng rng(5);
  const auto z = random_latent(7, rng);
  const auto s = random_latent(7, rng);
  const std::vector<double> zero(7, 0.0);
  const auto det = langevin_step(z, s, 0.4, zero);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(det.values[i], z.values[i] + 0.2 * s.values[i]);
  const auto tiny = langevin_step(z, s, 1e-30, rng);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(tiny.values[i], z.values[i], 1e-12);
  EXPECT_THROW(langevin_step(z, s, 0.0, rng), InvalidArgument);
  EXPECT_THROW(langevin_step(z, Latent::zeros({3}), 0.1, rng), InvalidArgument);
}

TEST(Langevin, NoiseVarianceMatchesStepSize) {
  Rng rng(6);
  const double lambda = 0.3;
  const std::size_t n = 100000;
  const auto z = Latent({1}, {1.25});
  const auto s = Latent::zeros({1});
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = langevin_step(z, s, lambda, rng).values[0] - 1.25;
    sum += d;
    sq += d * d;
  }
  const double mean = sum / n;
  const double var = (sq - n * mean * mean) / (n - 1);
  const double se = lambda * std::sqrt(2.0 / (n - 1));
  EXPECT_NEAR(var, lambda, 3 * se);
}

TEST(Langevin, CfgGaussianMoments) {
  const auto m0 = cfg_model(8, 2.0);
  auto m = m0;
  const auto sched = NoiseSchedule::geometric();
  m.bind_schedule(sched);
  const auto c = condition_code(1);
  const std::size_t n = 1000;
  const auto xs = sample_chains(m, sched, &c, 0.5, Sampler::kLangevin, 20, n, 11);
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> first;
  for (const auto& x : xs) first.push_back(x.values[0]);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto mo = coordinate_moments(xs, i);
    EXPECT_NEAR(mo.mean, 3.0, tol) << i;
    EXPECT_NEAR(mo.var, 1.0, 0.2) << i;
  }
  EXPECT_GT(ks_pvalue(first, 3.0), 0.01);
}

TEST(Langevin, UnguidedStationaryDistribution) {
  auto m = cfg_model(4, 0.0);
  const auto sched = NoiseSchedule::geometric();
  m.bind_schedule(sched);
  const auto c = condition_code(1);
  const auto xs = sample_chains(m, sched, &c, 0.0, Sampler::kLangevin, 20, 600, 12);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto mo = coordinate_moments(xs, i);
    EXPECT_NEAR(mo.mean, 0.0, 0.15) << i;
    EXPECT_NEAR(mo.var, 1.0, 0.15) << i;
  }
}

TEST(Langevin, DeterministicAcrossThreads) {
  auto m = cfg_model(3, 1.0);
  const auto sched = NoiseSchedule::geometric(10.0, 0.01, 20, 1.0);
  m.bind_schedule(sched);
  const auto c = condition_code(1);
  const auto a = sample_chains(m, sched, &c, 0.5, Sampler::kLangevin, 3, 16, 99, 1);
  const auto b = sample_chains(m, sched, &c, 0.5, Sampler::kLangevin, 3, 16, 99, 4);
  EXPECT_EQ(a, b);
  Rng r1(5), r2(5);
  EXPECT_EQ(sample_langevin(m, sched, &c, 0.5, 3, r1), sample_langevin(m, sched, &c, 0.5, 3, r2));
}

TEST(Euler, GaussianMeanAtZeroGuidance) {
  auto m = cfg_model(8, 2.0);
  const auto sched = NoiseSchedule::geometric();
  m.bind_schedule(sched);
  const auto c = condition_code(1);
  const std::size_t n = 1000;
  const auto xs = sample_chains(m, sched, &c, 0.0, Sampler::kEuler, 0, n, 21);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(coordinate_moments(xs, i).mean, 2.0, 0.15) << i;
}

TEST(Euler, SingleStepByHand) {
  NoiseSchedule sched{{2.0}, {4.0}};
  auto m = GaussianScoreModel({1.0}, 1.0);
  m.bind_schedule(sched);
  // score = -(3 - 1) / (1 + 4) = -0.4; z = 3 + (2 - 0) * 2 * -0.4 = 1.4
  const auto z = euler_from(m, sched, nullptr, 0.0, Latent({1}, {3.0}));
  EXPECT_NEAR(z.values[0], 1.4, 1e-15);
}

TEST(Euler, ZeroScoreReturnsInitialNoise) {
  const ZeroModel zero(5);
  const auto sched = NoiseSchedule::geometric(10.0, 0.1, 30, 1.0);
  Rng a(8), b(8);
  const auto out = sample_euler(zero, sched, nullptr, 0.0, a);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(out.values[i], 10.0 * b.normal());
}

TEST(Euler, EpsilonConventionMatchesScore) {
  auto m = cfg_model(4, 2.0);
  const auto sched = NoiseSchedule::geometric(20.0, 0.01, 40, 1.0);
  m.bind_schedule(sched);
  const EpsilonView eps(m, sched);
  const auto c = condition_code(1);
  Rng r1(3), r2(3);
  const auto a = sample_euler(m, sched, &c, 0.5, r1);
  const auto b = sample_euler(eps, sched, &c, 0.5, r2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
}

TEST(ForwardDiffuse, NoiseScaleAndUnbiasedness) {
  const auto sched = NoiseSchedule::geometric(5.0, 0.05, 10, 1.0);
  const Latent z0({2, 3}, {1, -2, 3, 0.5, 0, 7});
  Rng rng(9);
  const std::size_t n = 20000;
  std::vector<double> mean(6, 0.0);
  double sq = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto z = forward_diffuse(z0, 1, sched, rng);
    for (std::size_t i = 0; i < 6; ++i) {
      mean[i] += z.values[i] / n;
      sq += (z.values[i] - z0.values[i]) * (z.values[i] - z0.values[i]);
    }
  }
  const double s2 = 0.05 * 0.05;
  // Per-element squared noise: mean s2, sd s2 * sqrt(2), averaged over n * 6.
  EXPECT_NEAR(sq / (6.0 * n), s2, 4 * s2 * std::sqrt(2.0 / (6.0 * n)));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(mean[i], z0.values[i], 4 * 0.05 / std::sqrt(n));
  Rng a(1), b(1);
  EXPECT_EQ(forward_diffuse(z0, 4, sched, a), forward_diffuse(z0, 4, sched, b));
  EXPECT_THROW(forward_diffuse(z0, 0, sched, a), InvalidArgument);
  EXPECT_THROW(forward_diffuse(z0, 11, sched, a), InvalidArgument);
}

TEST(ForwardDiffuse, PosteriorMeanRecoversDataInExpectation) {
  // z0 ~ N(mu, s^2); E[z0 | z_k] = z_k + sigma_k^2 * score_k(z_k).
  const auto sched = NoiseSchedule::geometric(5.0, 0.1, 8, 1.0);
  auto m = GaussianScoreModel({1.0, -2.0}, 0.5);
  m.bind_schedule(sched);
  Rng rng(10);
  const std::size_t n = 40000;
  for (std::size_t k : {1u, 4u, 8u}) {
    std::vector<double> err(2, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const Latent z0({2}, {1.0 + std::sqrt(0.5) * rng.normal(), -2.0 + std::sqrt(0.5) * rng.normal()});
      const auto zk = forward_diffuse(z0, k, sched, rng);
      const auto s = m.evaluate(zk, k, nullptr);
      const double s2 = sched.sigma(k) * sched.sigma(k);
      for (std::size_t i = 0; i < 2; ++i) err[i] += (zk.values[i] + s2 * s.values[i] - z0.values[i]) / n;
    }
    // Posterior variance is below the prior's 0.5.
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(err[i], 0.0, 4 * std::sqrt(0.5 / n)) << k;
  }
}

TEST(ScoreMatching, PerfectZeroAndNonNegative) {
  const auto sched = NoiseSchedule::geometric(10.0, 0.01, 50, 1.0);
  const Latent z0({6}, {0.5, -1, 2, 0, 3, 1});
  const PerfectEpsilon perfect(z0, sched);
  Rng rng(12);
  EXPECT_NEAR(score_matching_loss(perfect, z0, nullptr, sched, rng, 200), 0.0, 1e-18);

  const ZeroModel zero(6, Convention::kEpsilon);
  const std::size_t n = 20000;
  const double loss = score_matching_loss(zero, z0, nullptr, sched, rng, n);
  // Chi-square with 6 degrees of freedom: mean 6, variance 12.
  EXPECT_NEAR(loss, 6.0, 4 * std::sqrt(12.0 / n));

  auto g = GaussianScoreModel(std::vector<double>(6, 0.0), 1.0);
  g.bind_schedule(sched);
  for (int t = 0; t < 20; ++t) EXPECT_GE(score_matching_loss(g, z0, nullptr, sched, rng, 3), 0.0);
  EXPECT_THROW(score_matching_loss(zero, z0, nullptr, sched, rng, 0), InvalidArgument);
}

TEST(LatentIo, RoundTripIsFloatQuantized) {
  Rng rng(13);
  Latent z = Latent::zeros({3, 4, 5});
  for (auto& v : z.values) v = rng.normal() * 10;
  std::stringstream ss;
  write_latent(ss, z);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "LATN");
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 3 * 4 + 60 * 4);
  const auto back = read_latent(ss);
  EXPECT_EQ(back.shape, z.shape);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(back.values[i], static_cast<double>(static_cast<float>(z.values[i])));
  std::stringstream again;
  write_latent(again, back);
  EXPECT_EQ(again.str(), bytes);
  std::stringstream cut(bytes.substr(0, bytes.size() - 2));
  EXPECT_THROW(read_latent(cut), FormatError);
  EXPECT_THROW(Latent({2, 0}, {}), InvalidArgument);
  EXPECT_THROW(Latent({2, 2}, {1, 2, 3}), InvalidArgument);
}

TEST(Codec, IdentityRoundTrip) {
  const geometry::Sphere sphere{{0.1, 0.2, 0.3}, 1.0};
  const auto vol = geometry::analytic_sdf(sphere, {9, 7, 5}, 0.3f, {-1.2f, -0.9f, -0.6f}, 0.9f);
  const IdentityCodec codec(0.3f, {-1.2f, -0.9f, -0.6f});
  const auto z = codec.encode(vol);
  EXPECT_EQ(z.shape, (std::vector<std::size_t>{5, 7, 9}));
  EXPECT_EQ(codec.decode(z), vol);
  EXPECT_THROW(codec.decode(Latent::zeros({4})), InvalidArgument);
}

TEST(GaussianModel, JsonAndErrors) {
  const auto m = parse_gaussian_model(
      R"({"variance": 2.0, "unconditional_mean": [0, 0], "conditions": [{"id": 7, "mean": [1, 2]}]})");
  EXPECT_EQ(m.dim(), 2u);
  const auto c = condition_code(7);
  const auto s = m.evaluate(Latent({2}, {0, 0}), 0, &c);
  EXPECT_DOUBLE_EQ(s.values[1], 1.0);
  const auto other = condition_code(8);
  EXPECT_THROW(m.evaluate(Latent({2}, {0, 0}), 0, &other), InvalidArgument);
  EXPECT_THROW(m.evaluate(Latent({3}, {0, 0, 0}), 0, nullptr), InvalidArgument);
  EXPECT_THROW(parse_gaussian_model(R"({"variance": 0, "unconditional_mean": [0]})"), InvalidArgument);
  EXPECT_THROW(parse_gaussian_model(R"({"variance": 1})"), FormatError);
}
