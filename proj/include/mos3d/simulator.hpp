#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "mos3d/domain.hpp"
#include "mos3d/world.hpp"

namespace mos3d {

/// n disjoint axis-aligned boxes with per-axis size drawn from
/// {1, ..., max(1, m/8)}, a robot start on a free cell, no obstacles.
/// Throws std::runtime_error when a box cannot be placed in 1000 attempts.
WorldSpec generate_world(int m, int n, double d, std::uint64_t seed);

/// Ground-truth dynamics for a world: moves into occupied cells are blocked.
DomainModel simulator_model(const WorldSpec& world, const SensorModel& sensor, const RewardSpec& rewards = {});

struct EpisodeLimits {
  int max_steps = 500;
  int max_find_actions = -1;  // < 0: number of objects
  double total_time_budget = std::numeric_limits<double>::infinity();
};

enum class Termination : std::uint8_t { Running, AllFound, FindLimit, StepLimit, TimeLimit };

std::string_view to_string(Termination t);

struct ObservationSummary {
  int free = 0;
  int object = 0;
  int unknown = 0;
};

struct StepRecord {
  int t = 0;
  Action action;
  double reward = 0.0;
  double discounted_reward = 0.0;
  ObservationSummary observation;
  CameraPose pose;
  int found = 0;
};

class Episode {
 public:
  Episode(WorldSpec world, DomainModel model, EpisodeLimits limits = {});

  const WorldSpec& world() const { return world_; }
  const DomainModel& model() const { return model_; }
  const MosState& state() const { return state_; }
  const ObjectFootprints& footprints() const { return footprints_; }

  int step_index() const { return t_; }
  double cumulative_reward() const { return cumulative_; }
  int find_actions() const { return find_actions_; }
  double time_used() const { return time_used_; }
  bool done() const { return termination_ != Termination::Running; }
  Termination termination() const { return termination_; }
  const std::vector<StepRecord>& log() const { return log_; }

  struct StepResult {
    FactoredObservation observation;
    double reward = 0.0;
    int newly_found = 0;
  };

  /// Applies one primitive action. Throws std::logic_error once done.
  StepResult step(const Action& a, Rng& rng);

  /// Adds planning / belief-update time against the total budget.
  void charge_time(double seconds);

  /// One JSON object per line: t, action, reward, observation counts, pose.
  void write_log(std::ostream& out) const;

 private:
  void update_termination();

  WorldSpec world_;
  DomainModel model_;
  EpisodeLimits limits_;
  ObjectFootprints footprints_;
  MosState state_;
  int t_ = 0;
  double cumulative_ = 0.0;
  double discount_ = 1.0;
  int find_actions_ = 0;
  double time_used_ = 0.0;
  Termination termination_ = Termination::Running;
  std::vector<StepRecord> log_;
};

/// Boustrophedon sweep over all ground cells with six Looks per visited cell;
/// declares Find right after a Look that reports a not-yet-found object.
class ExhaustivePolicy {
 public:
  explicit ExhaustivePolicy(int m);

  /// `last` is the observation produced by the previous action (or null).
  Action next(const RobotState& robot, const FactoredObservation* last);

  const std::vector<GridCell>& sweep() const { return sweep_; }

 private:
  std::vector<GridCell> sweep_;
  std::size_t target_ = 0;
  int looks_done_ = 0;
  std::optional<Action> last_action_;
  GridCell last_position_;
  std::vector<Direction> blocked_;
};

/// Uniform over the 13 primitive actions.
Action random_policy(Rng& rng);

}  // namespace mos3d
