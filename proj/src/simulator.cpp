#include "mos3d/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace mos3d {

WorldSpec generate_world(int m, int n, double d, std::uint64_t seed) {
  if (!is_power_of_two(m) || m < 2) throw std::invalid_argument("world size must be a power of two >= 2");
  if (n < 1 || n > kMaxObjects) throw std::invalid_argument("number of objects must be in [1, 64]");
  Rng rng(seed);
  WorldSpec world;
  world.m = m;
  world.d = d;
  world.seed = seed;

  const int max_dim = std::max(1, m / 8);
  std::set<GridCell> taken;
  for (int id = 1; id <= n; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int sx = 1 + uniform_index(rng, max_dim);
      const int sy = 1 + uniform_index(rng, max_dim);
      const int sz = 1 + uniform_index(rng, max_dim);
      const GridCell corner{uniform_index(rng, m - sx + 1), uniform_index(rng, m - sy + 1),
                            uniform_index(rng, m - sz + 1)};
      std::vector<GridCell> cells;
      for (int z = 0; z < sz; ++z)
        for (int y = 0; y < sy; ++y)
          for (int x = 0; x < sx; ++x) cells.push_back({corner.x + x, corner.y + y, corner.z + z});
      if (std::any_of(cells.begin(), cells.end(), [&](const GridCell& c) { return taken.contains(c); })) continue;
      taken.insert(cells.begin(), cells.end());
      world.objects.push_back({id, std::move(cells)});
      placed = true;
    }
    if (!placed) throw std::runtime_error("could not place object " + std::to_string(id) + ": world too crowded");
  }

  const int free_cells = m * m * m - static_cast<int>(taken.size());
  if (free_cells <= 0) throw std::runtime_error("no free cell left for the robot");
  int pick = uniform_index(rng, free_cells);
  for (int idx = 0; idx < m * m * m; ++idx) {
    const GridCell c = cell_from_index(idx, m);
    if (taken.contains(c)) continue;
    if (pick-- == 0) {
      world.robot_start.position = c;
      break;
    }
  }
  world.robot_start.direction = kAllDirections[static_cast<std::size_t>(uniform_index(rng, 6))];
  validate_world(world);
  return world;
}

DomainModel simulator_model(const WorldSpec& world, const SensorModel& sensor, const RewardSpec& rewards) {
  DomainModel model;
  model.m = world.m;
  model.sensor = sensor;
  model.rewards = rewards;
  model.obstacles = world.obstacles;
  model.block_moves_into_occupied = true;
  return model;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Running: return "running";
    case Termination::AllFound: return "all_found";
    case Termination::FindLimit: return "find_limit";
    case Termination::StepLimit: return "step_limit";
    case Termination::TimeLimit: return "time_limit";
  }
  return "?";
}

Episode::Episode(WorldSpec world, DomainModel model, EpisodeLimits limits)
    : world_(std::move(world)), model_(std::move(model)), limits_(limits) {
  validate_world(world_);
  if (model_.m != world_.m) throw std::invalid_argument("model and world disagree on grid size");
  if (limits_.max_find_actions < 0) limits_.max_find_actions = world_.n();
  footprints_ = footprints_of(world_);
  state_ = initial_state(world_);
  update_termination();
}

Episode::StepResult Episode::step(const Action& a, Rng& rng) {
  if (done()) throw std::logic_error("episode is already finished");
  if (!a.is_primitive()) throw std::invalid_argument("episodes execute primitive actions only");

  StepOutcome outcome = generative(state_, a, model_, rng, &footprints_);
  StepResult result;
  result.reward = outcome.reward;
  result.newly_found = outcome.next.robot.found.size() - state_.robot.found.size();

  StepRecord record;
  record.t = t_;
  record.action = a;
  record.reward = outcome.reward;
  record.discounted_reward = discount_ * outcome.reward;
  record.observation.free = static_cast<int>(outcome.observation.raw.visible_free.size());
  record.observation.unknown = static_cast<int>(outcome.observation.raw.occluded.size());
  for (const LabeledVoxel& v : outcome.observation.voxels) {
    if (v.label.kind == LabelKind::Object) ++record.observation.object;
  }
  record.observation.free += static_cast<int>(outcome.observation.raw.visible_object.size()) - record.observation.object;
  record.pose = outcome.next.robot.pose;
  record.found = outcome.next.robot.found.size();
  log_.push_back(record);

  cumulative_ += record.discounted_reward;
  discount_ *= model_.rewards.gamma;
  ++t_;
  if (a.kind == ActionKind::Find) ++find_actions_;
  state_ = std::move(outcome.next);
  result.observation = std::move(outcome.observation);
  update_termination();
  return result;
}

void Episode::charge_time(double seconds) {
  time_used_ += seconds;
  update_termination();
}

void Episode::update_termination() {
  if (termination_ != Termination::Running) return;
  if (all_found(state_)) {
    termination_ = Termination::AllFound;
  } else if (find_actions_ >= limits_.max_find_actions) {
    termination_ = Termination::FindLimit;
  } else if (t_ >= limits_.max_steps) {
    termination_ = Termination::StepLimit;
  } else if (time_used_ >= limits_.total_time_budget) {
    termination_ = Termination::TimeLimit;
  }
}

void Episode::write_log(std::ostream& out) const {
  for (const StepRecord& r : log_) {
    nlohmann::json line{
        {"t", r.t},
        {"action", to_string(r.action)},
        {"reward", r.reward},
        {"discounted_reward", r.discounted_reward},
        {"observation", {{"free", r.observation.free}, {"object", r.observation.object}, {"unknown", r.observation.unknown}}},
        {"pose", {{"position", {r.pose.position.x, r.pose.position.y, r.pose.position.z}},
                  {"direction", std::string(to_string(r.pose.direction))}}},
        {"found", r.found}};
    out << line.dump() << '\n';
  }
}

ExhaustivePolicy::ExhaustivePolicy(int m) {
  // Consecutive sweep cells are face neighbours.
  sweep_.reserve(static_cast<std::size_t>(m) * m * m);
  int row = 0;
  for (int z = 0; z < m; ++z) {
    for (int yi = 0; yi < m; ++yi) {
      const int y = (z % 2 == 0) ? yi : m - 1 - yi;
      for (int xi = 0; xi < m; ++xi) {
        const int x = (row % 2 == 0) ? xi : m - 1 - xi;
        sweep_.push_back({x, y, z});
      }
      ++row;
    }
  }
}

Action ExhaustivePolicy::next(const RobotState& robot, const FactoredObservation* last) {
  const auto emit = [&](const Action& a) {
    last_action_ = a;
    last_position_ = robot.pose.position;
    return a;
  };

  if (last && last_action_ && last_action_->kind == ActionKind::Look) {
    for (const LabeledVoxel& v : last->voxels) {
      if (v.label.kind == LabelKind::Object && !robot.found.contains(v.label.object_id)) {
        return emit(Action::find());
      }
    }
  }

  if (last_action_ && last_action_->kind == ActionKind::Move) {
    if (robot.pose.position == last_position_) {
      blocked_.push_back(last_action_->direction);
    } else {
      blocked_.clear();
    }
  }

  for (std::size_t guard = 0; guard < 2 * sweep_.size() + 2; ++guard) {
    if (target_ >= sweep_.size()) target_ = 0;
    const GridCell& goal = sweep_[target_];
    if (robot.pose.position == goal) {
      if (looks_done_ < 6) return emit(Action::look(kAllDirections[static_cast<std::size_t>(looks_done_++)]));
      ++target_;
      looks_done_ = 0;
      blocked_.clear();
      continue;
    }
    const GridCell& at = robot.pose.position;
    const std::array<std::pair<int, std::pair<Direction, Direction>>, 3> axes{{
        {goal.x - at.x, {Direction::PosX, Direction::NegX}},
        {goal.y - at.y, {Direction::PosY, Direction::NegY}},
        {goal.z - at.z, {Direction::PosZ, Direction::NegZ}},
    }};
    for (const auto& [diff, dirs] : axes) {
      if (diff == 0) continue;
      const Direction d = diff > 0 ? dirs.first : dirs.second;
      if (std::find(blocked_.begin(), blocked_.end(), d) == blocked_.end()) return emit(Action::move(d));
    }
    // Every productive move is blocked: give up on this cell.
    ++target_;
    looks_done_ = 0;
    blocked_.clear();
  }
  return emit(Action::look(robot.pose.direction));
}

Action random_policy(Rng& rng) {
  const auto actions = primitive_actions();
  return actions[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(actions.size())))];
}

}  // namespace mos3d
