// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/world/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "json.hpp"
#include "lidarworld/core/error.hpp"

namespace lidarworld::world {

void Trajectory::validate(double v_max) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("trajectory dt must be positive");
  if (steps.empty()) return;
  auto ids = [](const TimeStep& s) {
    std::set<int> out;
    for (const auto& a : s.actors)
      if (!out.insert(a.actor_id).second) throw InvalidArgument("duplicate actor id in timestep");
    return out;
  };
  const auto first = ids(steps.front());
  const double max_step = v_max * dt * (1.0 + 1e-12);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    steps[k].ego.validate(1e-6);
    for (const auto& a : steps[k].actors) a.pose.validate(1e-6);
    if (ids(steps[k]) != first) throw InvalidArgument("timesteps list different actor ids");
    if (k > 0 && (steps[k].ego.translation - steps[k - 1].ego.translation).norm() > max_step)
      throw InvalidArgument("ego moves faster than v_max between timesteps");
  }
}

Pose2 TrajectoryTemplate::at(double t) const {
  if (samples.empty()) return {};
  if (t <= samples.front().t) return {samples.front().x, samples.front().y, samples.front().heading};
  if (t >= samples.back().t) return {samples.back().x, samples.back().y, samples.back().heading};
  const auto hi = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const TrajectorySample& s) { return v < s.t; });
  const auto& b = *hi;
  const auto& a = *(hi - 1);
  const double u = (t - a.t) / (b.t - a.t);
  return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), a.heading + u * (b.heading - a.heading)};
}

TrajectoryTemplate canonicalize(ActorClass cls, std::vector<TrajectorySample> samples) {
  if (samples.size() < 2) throw InvalidArgument("trajectory template needs at least two samples");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.heading))
      throw InvalidArgument("non-finite trajectory sample");
    if (k > 0 && !(s.t > samples[k - 1].t)) throw InvalidArgument("trajectory times must increase");
  }
  const TrajectorySample s0 = samples.front();
  const double c = std::cos(s0.heading), s = std::sin(s0.heading);
  TrajectoryTemplate out{cls, s0.heading, {}};
  double prev = 0.0;
  for (const auto& p : samples) {
    const double dx = p.x - s0.x, dy = p.y - s0.y;
    double h = p.heading - s0.heading;
    h = prev + std::remainder(h - prev, 2.0 * std::numbers::pi);
    prev = h;
    out.samples.push_back({p.t - s0.t, c * dx + s * dy, -s * dx + c * dy, h});
  }
  out.samples.front() = {0.0, 0.0, 0.0, 0.0};
  return out;
}

TrajectoryBank parse_trajectory_bank(std::string_view text) {
  TrajectoryBank bank;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& item : doc.at("templates")) {
      const ActorClass cls = parse_actor_class(item.value("class", std::string("vehicle")));
      std::vector<TrajectorySample> samples;
      for (const auto& row : item.at("samples")) {
        if (row.size() != 4) throw FormatError("template sample must be [t, x, y, heading]");
        samples.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>(), row[3].get<double>()});
      }
      bank.templates.push_back(canonicalize(cls, std::move(samples)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("trajectory bank: ") + e.what());
  }
  return bank;
}

TrajectoryBank load_trajectory_bank(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_trajectory_bank(text);
}

std::string dump_trajectory_bank(const TrajectoryBank& bank) {
  nlohmann::json doc;
  auto& arr = doc["templates"] = nlohmann::json::array();
  for (const auto& t : bank.templates) {
    // Written in the source orientation so that loading restores source_heading.
    const double c = std::cos(t.source_heading), s = std::sin(t.source_heading);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : t.samples)
      rows.push_back({p.t, c * p.x - s * p.y, s * p.x + c * p.y, p.heading + t.source_heading});
    arr.push_back({{"class", std::string(to_string(t.cls))}, {"samples", rows}});
  }
  return doc.dump(2);
}

TrajectoryTemplate straight_template(ActorClass cls, double speed, double duration, double dt, double heading) {
  if (!(dt > 0.0) || !(duration > 0.0)) throw InvalidArgument("template duration and dt must be positive");
  std::vector<TrajectorySample> samples;
  const auto n = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  const double c = std::cos(heading), s = std::sin(heading);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    samples.push_back({t, speed * t * c, speed * t * s, heading});
  }
  return canonicalize(cls, std::move(samples));
}

}  // namespace lidarworld::world
