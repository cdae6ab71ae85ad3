// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/diffusion/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "lidarworld/core/error.hpp"

namespace lidarworld::diffusion {

NoiseSchedule NoiseSchedule::geometric(double sigma_max, double sigma_min, std::size_t levels, double eta) {
  if (levels < 1) throw InvalidArgument("schedule needs at least one level");
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min) || !std::isfinite(sigma_max))
    throw InvalidArgument("schedule needs 0 < sigma_min <= sigma_max");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("step-size factor must be positive");
  NoiseSchedule s;
  const double ratio = levels > 1 ? std::log(sigma_max / sigma_min) / static_cast<double>(levels - 1) : 0.0;
  for (std::size_t k = 0; k < levels; ++k) {
    const double sigma = k + 1 == levels ? sigma_max : sigma_min * std::exp(ratio * static_cast<double>(k));
    s.sigmas.push_back(sigma);
    s.lambdas.push_back(eta * sigma * sigma);
  }
  s.validate();
  return s;
}

void NoiseSchedule::validate() const {
  if (sigmas.empty()) throw InvalidArgument("schedule needs at least one level");
  if (lambdas.size() != sigmas.size()) throw InvalidArgument("schedule sigma and lambda counts differ");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i])) throw InvalidArgument("sigma_k must be positive");
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) throw InvalidArgument("lambda_k must be positive");
    if (i > 0 && sigmas[i] < sigmas[i - 1]) throw InvalidArgument("sigma_k must not decrease with k");
  }
}

Latent condition_code(long id) { return Latent({1}, {static_cast<double>(id)}); }

GaussianScoreModel::GaussianScoreModel(std::vector<double> unconditional_mean, double variance,
                                       std::vector<Condition> conditions)
    : unconditional_mean_(std::move(unconditional_mean)), variance_(variance), conditions_(std::move(conditions)) {
  if (unconditional_mean_.empty()) throw InvalidArgument("Gaussian model needs dim >= 1");
  if (!(variance_ > 0.0) || !std::isfinite(variance_)) throw InvalidArgument("Gaussian model variance must be positive");
  std::set<long> ids;
  for (const auto& c : conditions_) {
    if (c.mean.size() != dim()) throw InvalidArgument("condition mean has the wrong dimension");
    if (!ids.insert(c.id).second) throw InvalidArgument("duplicate condition id");
  }
}

const std::vector<double>& GaussianScoreModel::mean(const Latent* c) const {
  if (!c) return unconditional_mean_;
  if (c->shape != std::vector<std::size_t>{1}) throw InvalidArgument("condition code must be a single value");
  for (const auto& cond : conditions_)
    if (static_cast<double>(cond.id) == c->values[0]) return cond.mean;
  throw InvalidArgument("unknown condition id");
}

Latent GaussianScoreModel::evaluate(const Latent& z, std::size_t k, const Latent* c) const {
  if (z.shape != latent_shape()) throw InvalidArgument("latent shape does not match the model");
  const auto& mu = mean(c);
  double var = variance_;
  if (k > 0 && !sigmas_.empty()) {
    const double s = sigmas_.at(k - 1);
    var += s * s;
  }
  Latent out = Latent::zeros(latent_shape());
  for (std::size_t i = 0; i < dim(); ++i) out.values[i] = -(z.values[i] - mu[i]) / var;
  return out;
}

GaussianScoreModel parse_gaussian_model(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::vector<GaussianScoreModel::Condition> conditions;
    for (const auto& c : doc.value("conditions", nlohmann::json::array()))
      conditions.push_back({c.at("id").get<long>(), c.at("mean").get<std::vector<double>>()});
    return GaussianScoreModel(doc.at("unconditional_mean").get<std::vector<double>>(), doc.at("variance").get<double>(),
                              std::move(conditions));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("Gaussian model: ") + e.what());
  }
}

GaussianScoreModel load_gaussian_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_gaussian_model(text);
}

}  // namespace lidarworld::diffusion
