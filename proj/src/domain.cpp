#include "mos3d/domain.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace mos3d {

namespace {

GridCell add(const GridCell& a, const GridCell& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }

std::span<const GridCell> cells_of(const MosState& s, const ObjectFootprints* footprints, int index) {
  if (footprints) return (*footprints)[static_cast<std::size_t>(index)];
  return {&s.objects[static_cast<std::size_t>(index)], 1};
}

std::vector<GridCell> occupied_cells(const MosState& s, const DomainModel& model,
                                     const ObjectFootprints* footprints) {
  std::vector<GridCell> out(model.obstacles.begin(), model.obstacles.end());
  for (int i = 0; i < s.num_objects(); ++i) {
    auto cells = cells_of(s, footprints, i);
    out.insert(out.end(), cells.begin(), cells.end());
  }
  return out;
}

void check_footprints(const MosState& s, const ObjectFootprints* footprints) {
  if (footprints && footprints->size() != s.objects.size()) {
    throw std::invalid_argument("footprints do not match the number of objects");
  }
}

}  // namespace

bool all_found(const MosState& s) { return s.robot.found.size() == s.num_objects(); }

std::size_t ActionHash::operator()(const Action& a) const noexcept {
  std::size_t h = static_cast<std::size_t>(a.kind) * 31 + static_cast<std::size_t>(a.direction);
  if (a.kind == ActionKind::MoveOp) {
    h = h * 1000003 ^ GridCellHash{}(a.goal.cell);
    h = h * 31 + static_cast<std::size_t>(a.goal.level);
  }
  return h;
}

std::span<const Action> primitive_actions() {
  static const std::array<Action, 13> actions = [] {
    std::array<Action, 13> out{};
    std::size_t i = 0;
    for (Direction d : kAllDirections) out[i++] = Action::move(d);
    for (Direction d : kAllDirections) out[i++] = Action::look(d);
    out[i] = Action::find();
    return out;
  }();
  return actions;
}

std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActionKind::Move: return "move" + std::string(to_string(a.direction));
    case ActionKind::Look: return "look" + std::string(to_string(a.direction));
    case ActionKind::Find: return "find";
    case ActionKind::MoveOp:
      return "moveop(l" + std::to_string(a.goal.level) + ":" + std::to_string(a.goal.cell.x) + "," +
             std::to_string(a.goal.cell.y) + "," + std::to_string(a.goal.cell.z) + ")";
  }
  return "?";
}

void SensorModel::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
  frustum.validate();
}

std::vector<int> visible_objects(const CameraPose& pose, const MosState& s, const DomainModel& model,
                                 const ObjectFootprints* footprints) {
  check_footprints(s, footprints);
  const ViewFrustum frustum(pose, model.sensor.frustum);
  const std::vector<GridCell> blockers = occupied_cells(s, model, footprints);
  std::vector<int> ids;
  for (int i = 0; i < s.num_objects(); ++i) {
    for (const GridCell& c : cells_of(s, footprints, i)) {
      if (cell_visible(frustum, c, blockers)) {
        ids.push_back(i + 1);
        break;
      }
    }
  }
  return ids;
}

MosState transition(const MosState& s, const Action& a, const DomainModel& model, Rng& rng,
                    const ObjectFootprints* footprints) {
  check_footprints(s, footprints);
  MosState next = s;
  switch (a.kind) {
    case ActionKind::Move: {
      const GridCell from = s.robot.pose.position;
      GridCell to = add(from, unit_vector(a.direction));
      if (model.move_noise) to = model.move_noise(from, to, model.m, rng);
      if (!in_bounds(to, model.m)) break;
      if (model.block_moves_into_occupied) {
        const std::vector<GridCell> occupied = occupied_cells(s, model, footprints);
        if (std::find(occupied.begin(), occupied.end(), to) != occupied.end()) break;
      }
      next.robot.pose.position = to;
      break;
    }
    case ActionKind::Look:
      next.robot.pose.direction = a.direction;
      break;
    case ActionKind::Find:
      for (int id : visible_objects(s.robot.pose, s, model, footprints)) next.robot.found.insert(id);
      break;
    case ActionKind::MoveOp:
      throw std::invalid_argument("transition expects a primitive action");
  }
  return next;
}

FactoredObservation sample_observation(const MosState& next, const Action& a, const DomainModel& model,
                                       Rng& rng, const ObjectFootprints* footprints) {
  check_footprints(next, footprints);
  FactoredObservation obs;
  obs.per_object.resize(next.objects.size());
  if (a.kind != ActionKind::Look) return obs;

  Occupancy occupancy;
  for (int i = 0; i < next.num_objects(); ++i) {
    for (const GridCell& c : cells_of(next, footprints, i)) occupancy.try_emplace(c, i + 1);
  }
  for (const GridCell& c : model.obstacles) occupancy.try_emplace(c, kObstacleId);
  obs.raw = compute_visibility(next.robot.pose, model.sensor.frustum, model.m, occupancy);

  obs.voxels.reserve(obs.raw.visible_free.size() + obs.raw.visible_object.size());
  for (const GridCell& c : obs.raw.visible_free) obs.voxels.push_back({c, VoxelLabel::free()});
  for (const auto& [c, id] : obs.raw.visible_object) obs.voxels.push_back({c, VoxelLabel::free()});
  std::sort(obs.voxels.begin(), obs.voxels.end(),
            [](const LabeledVoxel& l, const LabeledVoxel& r) { return l.cell < r.cell; });
  const auto voxel_at = [&](const GridCell& c) {
    return std::lower_bound(obs.voxels.begin(), obs.voxels.end(), c,
                            [](const LabeledVoxel& v, const GridCell& key) { return v.cell < key; });
  };

  const double p_detect = model.sensor.detection_probability();
  std::vector<std::vector<GridCell>> detected(next.objects.size());
  for (int i = 0; i < next.num_objects(); ++i) {
    for (const GridCell& c : cells_of(next, footprints, i)) {
      if (!obs.raw.visible_object.contains(c)) continue;
      if (!sensor_fires(p_detect, rng)) continue;
      detected[static_cast<std::size_t>(i)].push_back(c);
      auto it = voxel_at(c);
      if (it->label.kind == LabelKind::Free) it->label = VoxelLabel::object(i + 1);
    }
  }

  for (int i = 0; i < next.num_objects(); ++i) {
    auto& hits = detected[static_cast<std::size_t>(i)];
    auto& factor = obs.per_object[static_cast<std::size_t>(i)];
    factor.reserve(obs.voxels.size());
    for (const LabeledVoxel& v : obs.voxels) {
      const bool hit = std::find(hits.begin(), hits.end(), v.cell) != hits.end();
      factor.push_back({v.cell, hit ? VoxelLabel::object(i + 1) : VoxelLabel::free()});
    }
  }
  return obs;
}

double reward(const MosState& s, const Action& a, const MosState& next, const RewardSpec& rewards) {
  switch (a.kind) {
    case ActionKind::Move:
    case ActionKind::Look:
      return rewards.r_step;
    case ActionKind::Find:
      return next.robot.found.size() > s.robot.found.size() ? rewards.r_max : rewards.r_min;
    case ActionKind::MoveOp:
      break;
  }
  throw std::invalid_argument("reward expects a primitive action");
}

StepOutcome generative(const MosState& s, const Action& a, const DomainModel& model, Rng& rng,
                       const ObjectFootprints* footprints) {
  StepOutcome out;
  out.next = transition(s, a, model, rng, footprints);
  out.observation = sample_observation(out.next, a, model, rng, footprints);
  out.reward = reward(s, a, out.next, model.rewards);
  return out;
}

void belief_update_all(std::span<OctreeBelief> beliefs, const Action& a, const FactoredObservation& obs,
                       const SensorModel& sensor, const FoundSet& frozen) {
  if (a.kind != ActionKind::Look) return;
  if (obs.per_object.size() != beliefs.size()) {
    throw std::invalid_argument("observation and beliefs disagree on the number of objects");
  }
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (frozen.contains(id)) continue;
    beliefs[i].update(obs.per_object[i], sensor.alpha, sensor.beta, id);
  }
}

std::vector<std::int32_t> detection_key(const FactoredObservation& obs, int num_objects, int m) {
  std::vector<std::int32_t> key(static_cast<std::size_t>(num_objects), -1);
  for (int i = 0; i < num_objects && static_cast<std::size_t>(i) < obs.per_object.size(); ++i) {
    for (const LabeledVoxel& v : obs.per_object[static_cast<std::size_t>(i)]) {
      if (v.label.kind == LabelKind::Object) {
        key[static_cast<std::size_t>(i)] = linear_index(v.cell, m);
        break;
      }
    }
  }
  return key;
}

}  // namespace mos3d
