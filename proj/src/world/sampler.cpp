// SPDX-License-Identifier: Apache-2.0
#include "lidarworld/world/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lidarworld/core/error.hpp"

namespace lidarworld::world {

using geometry::Aabb;

namespace {

constexpr std::uint64_t kSamplerStream = 0x5A4D50;
constexpr double kGaitPeriod = 1.2;

Aabb footprint_bounds(const Footprint& f) {
  return {Vec3{-f.length / 2, -f.width / 2, 0.0}, Vec3{f.length / 2, f.width / 2, f.height}};
}

}  // namespace

std::optional<std::vector<Pose>> place_track(const WorldScene& scene, const Aabb& local_bounds,
                                             const TrajectoryTemplate& tmpl, const Pose2& anchor,
                                             std::span<const std::vector<Aabb>> others, const SamplerParams& params) {
  std::vector<Pose> poses;
  poses.reserve(params.steps);
  const double max_step = params.v_max * params.dt;
  for (std::size_t k = 0; k < params.steps; ++k) {
    const Pose2 w = anchor.compose(tmpl.at(static_cast<double>(k) * params.dt));
    const auto gz = ground_height(scene, w.x, w.y, params.z_top);
    if (!gz) return std::nullopt;
    Pose pose = Pose::from_yaw(w.heading, {w.x, w.y, *gz + params.axle_offset});
    if (k > 0 && (pose.translation - poses.back().translation).norm() > max_step) return std::nullopt;
    const std::span<const Aabb> occupied = k < others.size() ? std::span<const Aabb>(others[k]) : std::span<const Aabb>{};
    if (!check_collision(scene, local_bounds, pose, occupied, params.collision).clean()) return std::nullopt;
    poses.push_back(std::move(pose));
  }
  return poses;
}

AnchorCells anchor_cells(const SemanticLayout& layout) {
  AnchorCells out;
  if (layout.channels() == 0 || layout.cells.empty()) return out;
  out.cell_size = layout.resolution;
  out.heading = layout.heading;
  std::vector<std::size_t> channels;
  for (const char* name : {"lane markings", "road lines"}) {
    const auto it = std::find(layout.class_names.begin(), layout.class_names.end(), name);
    if (it != layout.class_names.end()) channels.push_back(static_cast<std::size_t>(it - layout.class_names.begin()));
  }
  if (channels.empty())
    for (std::size_t c = 0; c < std::min<std::size_t>(2, layout.channels()); ++c) channels.push_back(c);
  for (std::size_t y = 0; y < layout.ny; ++y)
    for (std::size_t x = 0; x < layout.nx; ++x)
      if (std::any_of(channels.begin(), channels.end(), [&](std::size_t c) { return layout.at(c, x, y); }))
        out.centers.push_back(layout.cell_center(x, y));
  return out;
}

Placement draw_placement(const TrajectoryBank& bank, ActorClass cls, const AnchorCells& anchors,
                         const Aabb& fallback_area, const SamplerParams& params, Rng& rng) {
  if (bank.templates.empty()) throw InvalidArgument("trajectory bank is empty");
  std::vector<std::size_t> matching;
  for (std::size_t i = 0; i < bank.templates.size(); ++i)
    if (bank.templates[i].cls == cls) matching.push_back(i);
  Placement p;
  p.template_index = matching.empty() ? rng.index(bank.templates.size()) : matching[rng.index(matching.size())];

  Vec2 pos = Vec2::Zero();
  if (!anchors.centers.empty()) {
    const Vec2 cell = anchors.centers[rng.index(anchors.centers.size())];
    const double h = 0.5 * anchors.cell_size;
    const double u = rng.uniform(-h, h), v = rng.uniform(-h, h);
    const double c = std::cos(anchors.heading), s = std::sin(anchors.heading);
    pos = cell + Vec2{c * u - s * v, s * u + c * v};
  } else if (!fallback_area.empty()) {
    pos = {rng.uniform(fallback_area.min.x(), fallback_area.max.x()),
           rng.uniform(fallback_area.min.y(), fallback_area.max.y())};
  }
  const double jitter = rng.uniform(-params.heading_jitter, params.heading_jitter);
  p.anchor = {pos.x(), pos.y(), bank.templates[p.template_index].source_heading + jitter};
  p.gait_phase = rng.uniform(0.0, kGaitPeriod);
  return p;
}

SamplingResult sample_trajectories(const TrajectoryBank& bank, const WorldScene& scene, const SemanticLayout& layout,
                                   std::size_t n_actors, std::uint64_t seed, std::size_t max_attempts,
                                   const SamplerParams& params, const std::optional<std::vector<Pose>>& fixed_ego) {
  if (bank.templates.empty()) throw InvalidArgument("trajectory bank is empty");
  if (max_attempts < 1) throw InvalidArgument("max_attempts must be at least 1");
  if (params.steps < 1 || !(params.dt > 0.0)) throw InvalidArgument("sampler needs steps >= 1 and dt > 0");
  if (n_actors > scene.actors.size()) throw InvalidArgument("scene has fewer actors than requested");
  if (fixed_ego && fixed_ego->size() != params.steps) throw InvalidArgument("fixed ego track length != steps");

  struct Slot {
    ActorClass cls;
    Aabb bounds;
    const Actor* actor;
  };
  std::vector<Slot> slots;
  if (!fixed_ego) slots.push_back({ActorClass::kVehicle, footprint_bounds(params.ego_footprint), nullptr});
  for (std::size_t i = 0; i < n_actors; ++i) {
    const Actor& a = scene.actors[i];
    slots.push_back({a.cls, a.local_bounds(), &a});
  }

  std::vector<std::vector<Aabb>> occupied(params.steps);
  std::vector<Pose> ego_track;
  if (fixed_ego) {
    ego_track = *fixed_ego;
    const Aabb eb = footprint_bounds(params.ego_footprint);
    for (std::size_t k = 0; k < params.steps; ++k) occupied[k].push_back(posed_bounds(eb, ego_track[k]));
  }

  const AnchorCells anchors = anchor_cells(layout);
  const Aabb area = scene.static_bvh ? scene.static_bvh->bounds() : Aabb{};
  std::vector<std::pair<std::vector<Pose>, double>> actor_tracks;

  SamplingResult result;
  std::size_t slot = 0;
  for (; result.attempts < max_attempts && slot < slots.size(); ++result.attempts) {
    Rng rng = Rng::substream(seed, kSamplerStream, result.attempts);
    const Placement pl = draw_placement(bank, slots[slot].cls, anchors, area, params, rng);
    auto track = place_track(scene, slots[slot].bounds, bank.templates[pl.template_index], pl.anchor, occupied, params);
    if (!track) continue;
    ++result.accepted;
    for (std::size_t k = 0; k < params.steps; ++k) occupied[k].push_back(posed_bounds(slots[slot].bounds, (*track)[k]));
    if (slots[slot].actor) {
      actor_tracks.emplace_back(std::move(*track), pl.gait_phase);
    } else {
      ego_track = std::move(*track);
    }
    ++slot;
  }
  if (slot < slots.size())
    throw ExhaustionError("rejective sampling exhausted " + std::to_string(max_attempts) + " attempts with " +
                              std::to_string(actor_tracks.size()) + " of " + std::to_string(n_actors) +
                              " actor tracks accepted",
                          actor_tracks.size(), n_actors);

  Trajectory& traj = result.trajectory;
  traj.dt = params.dt;
  traj.steps.resize(params.steps);
  for (std::size_t k = 0; k < params.steps; ++k) {
    traj.steps[k].ego = ego_track[k];
    for (std::size_t i = 0; i < n_actors; ++i) {
      const Actor& a = scene.actors[i];
      ActorState st{a.id, actor_tracks[i].first[k], {}};
      if (a.articulated()) st.joints = walk_cycle(static_cast<double>(k) * params.dt + actor_tracks[i].second, kGaitPeriod);
      traj.steps[k].actors.push_back(std::move(st));
    }
  }
  return result;
}

std::string verify_trajectory(const WorldScene& scene, const Trajectory& traj, const SamplerParams& params) {
  const Aabb ego_bounds = footprint_bounds(params.ego_footprint);
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const TimeStep& step = traj.steps[k];
    struct Box {
      int id;
      Aabb local;
      Pose pose;
    };
    std::vector<Box> boxes{{0, ego_bounds, step.ego}};
    for (const auto& st : step.actors) {
      const Actor* a = scene.find_actor(st.actor_id);
      if (!a) return "step " + std::to_string(k) + ": unknown actor " + std::to_string(st.actor_id);
      boxes.push_back({a->id, a->local_bounds(), st.pose});
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      std::vector<Aabb> others;
      for (std::size_t j = 0; j < boxes.size(); ++j)
        if (j != i) others.push_back(posed_bounds(boxes[j].local, boxes[j].pose));
      const auto r = check_collision(scene, boxes[i].local, boxes[i].pose, others, params.collision);
      const std::string who = "step " + std::to_string(k) + " id " + std::to_string(boxes[i].id) + ": ";
      if (r.off_mesh) return who + "off mesh";
      if (r.static_hit) return who + "static collision";
      if (r.actor_hit) return who + "actor collision";
      const Vec3& t = boxes[i].pose.translation;
      const auto gz = ground_height(scene, t.x(), t.y(), params.z_top);
      if (!gz || std::abs(t.z() - (*gz + params.axle_offset)) > 1e-6) return who + "not on the ground";
    }
  }
  return {};
}

}  // namespace lidarworld::world
