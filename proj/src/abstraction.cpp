#include "mos3d/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mos3d {

namespace {

/// A ground cell of `region` drawn with weight Val(s) / Val(region). The
/// inverse image of a ground cell is the cell itself.
std::optional<GridCell> weighted_ground_sample(const CellAtLevel& region, const OctreeBelief& belief, Rng& rng) {
  if (region.level == 0) return region.cell;
  auto c = belief.sample_within(region, 0, rng);
  if (!c) return std::nullopt;
  return c->cell;
}

}  // namespace

std::string AbstractInstance::name() const {
  if (level == action_level) return "l" + std::to_string(level);
  return "l" + std::to_string(level) + "-op" + std::to_string(action_level);
}

MoveOpPlan expand_moveop(const CameraPose& pose, const CellAtLevel& goal, const RewardSpec& rewards) {
  MoveOpPlan plan;
  plan.goal = goal;
  plan.destination = pose.position;
  if (contains_ground(goal, pose.position)) return plan;

  const GridCell target = center_ground_cell(goal);
  GridCell at = pose.position;
  double discount = 1.0;
  const auto walk = [&](int& coord, int to, Direction pos, Direction neg) {
    while (coord != to) {
      plan.primitive_moves.push_back(Action::move(coord < to ? pos : neg));
      coord += coord < to ? 1 : -1;
      plan.cumulative_discounted_cost += discount * rewards.r_step;
      discount *= rewards.gamma;
    }
  };
  walk(at.x, target.x, Direction::PosX, Direction::NegX);
  walk(at.y, target.y, Direction::PosY, Direction::NegY);
  walk(at.z, target.z, Direction::PosZ, Direction::NegZ);
  plan.destination = at;
  return plan;
}

std::vector<CellAtLevel> moveop_goals(const GridCell& robot, int level, int m, std::size_t cap) {
  const int extent = level_extent(m, level);
  const int reach = 1 << (level + 1);
  const CellAtLevel own = level_ancestor(robot, level);
  struct Candidate {
    int dist2;
    CellAtLevel cell;
  };
  std::vector<Candidate> candidates;
  const int side = 1 << level;
  const auto range = [&](int coord) {
    // Cells whose center lies within `reach` of coord on this axis.
    const int lo = std::max(0, (coord - reach) / side - 1);
    const int hi = std::min(extent - 1, (coord + reach) / side + 1);
    return std::pair{lo, hi};
  };
  const auto [x0, x1] = range(robot.x);
  const auto [y0, y1] = range(robot.y);
  const auto [z0, z1] = range(robot.z);
  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const CellAtLevel c{{x, y, z}, level};
        if (c == own) continue;
        const GridCell center = center_ground_cell(c);
        const int dx = center.x - robot.x, dy = center.y - robot.y, dz = center.z - robot.z;
        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) > reach) continue;
        candidates.push_back({dx * dx + dy * dy + dz * dz, c});
      }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.cell < b.cell;
  });
  std::vector<CellAtLevel> goals;
  for (const Candidate& c : candidates) {
    if (goals.size() >= cap) break;
    goals.push_back(c.cell);
  }
  return goals;
}

MosState abstract_state(const MosState& s, int level) {
  MosState out = s;
  for (GridCell& c : out.objects) c = level_ancestor(c, level).cell;
  return out;
}

bool abstract_find_transition(bool found, const CellAtLevel& region, const OctreeBelief& belief,
                              const ViewFrustum& frustum, std::span<const GridCell> blockers, Rng& rng) {
  if (found) return true;
  const auto ground = weighted_ground_sample(region, belief, rng);
  if (!ground) return found;
  return cell_visible(frustum, *ground, blockers);
}

VoxelLabel abstract_observation(int object_id, const CellAtLevel& region, const OctreeBelief& belief,
                                const ViewFrustum& frustum, std::span<const GridCell> blockers,
                                const SensorModel& sensor, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  int visible = 0;
  for (int j = 0; j < k; ++j) {
    const auto ground = weighted_ground_sample(region, belief, rng);
    if (!ground) return VoxelLabel::free();
    if (cell_visible(frustum, *ground, blockers)) ++visible;
  }
  if (2 * visible <= k) return VoxelLabel::free();
  return sensor_fires(sensor.detection_probability(), rng) ? VoxelLabel::object(object_id) : VoxelLabel::free();
}

AbstractProblem::AbstractProblem(AbstractInstance instance, const DomainModel& model,
                                 std::span<const OctreeBelief> beliefs)
    : instance_(instance), model_(&model), beliefs_(beliefs) {
  const int max_level = max_level_for(model.m);
  if (instance_.level < 0 || instance_.level > max_level || instance_.action_level < 0 ||
      instance_.action_level > max_level) {
    throw std::invalid_argument("instance level out of range for grid size");
  }
  if (instance_.k_samples < 1) throw std::invalid_argument("k_samples must be >= 1");
}

const std::vector<Action>& AbstractProblem::actions(const MosState& s) const {
  const int m = model_->m;
  if (action_cache_.empty()) action_cache_.resize(static_cast<std::size_t>(m) * m * m);
  const GridCell& robot = s.robot.pose.position;
  std::vector<Action>& out = action_cache_[static_cast<std::size_t>(linear_index(robot, m))];
  if (!out.empty()) return out;
  if (instance_.action_level == 0) {
    const auto prims = primitive_actions();
    out.assign(prims.begin(), prims.end());
    return out;
  }
  for (const CellAtLevel& goal : moveop_goals(robot, instance_.action_level, m)) out.push_back(Action::move_op(goal));
  for (Direction d : kAllDirections) out.push_back(Action::look(d));
  out.push_back(Action::find());
  return out;
}

std::vector<GridCell> AbstractProblem::blockers_for(const MosState& s) const {
  std::vector<GridCell> blockers = model_->obstacles;
  // Other objects only occlude when their ground cells are known.
  if (instance_.level == 0) blockers.insert(blockers.end(), s.objects.begin(), s.objects.end());
  return blockers;
}

AbstractProblem::Outcome AbstractProblem::generate(const MosState& s, const Action& a, Rng& rng) const {
  Outcome out;
  out.next = s;
  out.observation.assign(s.objects.size(), -1);
  const int n = s.num_objects();
  switch (a.kind) {
    case ActionKind::MoveOp: {
      const MoveOpPlan plan = expand_moveop(s.robot.pose, a.goal, model_->rewards);
      out.next.robot.pose.position = plan.destination;
      out.reward = plan.cumulative_discounted_cost;
      return out;
    }
    case ActionKind::Move:
      out.next = transition(s, a, *model_, rng);
      out.reward = model_->rewards.r_step;
      return out;
    case ActionKind::Look: {
      out.next.robot.pose.direction = a.direction;
      const ViewFrustum frustum(out.next.robot.pose, model_->sensor.frustum);
      const std::vector<GridCell> blockers = blockers_for(s);
      const int extent = level_extent(model_->m, instance_.level);
      for (int i = 0; i < n; ++i) {
        const CellAtLevel region{s.objects[static_cast<std::size_t>(i)], instance_.level};
        const VoxelLabel label =
            abstract_observation(i + 1, region, beliefs_[static_cast<std::size_t>(i)], frustum, blockers,
                                 model_->sensor, instance_.k_samples, rng);
        if (label.kind == LabelKind::Object) out.observation[static_cast<std::size_t>(i)] = linear_index(region.cell, extent);
      }
      out.reward = model_->rewards.r_step;
      return out;
    }
    case ActionKind::Find: {
      const ViewFrustum frustum(s.robot.pose, model_->sensor.frustum);
      const std::vector<GridCell> blockers = blockers_for(s);
      for (int i = 0; i < n; ++i) {
        const int id = i + 1;
        if (s.robot.found.contains(id)) continue;
        const CellAtLevel region{s.objects[static_cast<std::size_t>(i)], instance_.level};
        if (abstract_find_transition(false, region, beliefs_[static_cast<std::size_t>(i)], frustum, blockers, rng)) {
          out.next.robot.found.insert(id);
        }
      }
      out.reward = reward(s, a, out.next, model_->rewards);
      return out;
    }
  }
  return out;
}

MosState AbstractProblem::sample_root(const RobotState& robot, Rng& rng) const {
  MosState s;
  s.robot = robot;
  s.objects.reserve(beliefs_.size());
  for (const OctreeBelief& b : beliefs_) s.objects.push_back(b.sample(instance_.level, rng).cell);
  return s;
}

}  // namespace mos3d
