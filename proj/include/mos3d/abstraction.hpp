#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mos3d/domain.hpp"
#include "mos3d/octree_belief.hpp"

namespace mos3d {

/// One abstract search problem. Object states and observations live on the
/// level-`level` grid; MoveOp goals on the level-`action_level` grid.
/// action_level == 0 means the six primitive Moves.
struct AbstractInstance {
  int level = 0;
  int action_level = 0;
  int k_samples = 10;

  static AbstractInstance at_level(int l, int k = 10) { return {l, l, k}; }
  std::string name() const;
};

struct MoveOpPlan {
  CellAtLevel goal;
  std::vector<Action> primitive_moves;
  double cumulative_discounted_cost = 0.0;
  GridCell destination;
};

/// Greedy x-then-y-then-z walk to the center ground cell of `goal`; empty
/// when the robot already stands inside the goal.
MoveOpPlan expand_moveop(const CameraPose& pose, const CellAtLevel& goal, const RewardSpec& rewards);

/// Level-l cells whose center ground cell lies within Chebyshev distance
/// 2^(l+1) of the robot, excluding the robot's own cell, nearest first and
/// capped at `cap`.
std::vector<CellAtLevel> moveop_goals(const GridCell& robot, int level, int m, std::size_t cap = 26);

/// phi: robot kept as is, every object cell coarsened to `level`.
MosState abstract_state(const MosState& s, int level);

/// Samples one ground cell of `region` by octree weight and applies the
/// ground Find rule. Already-found objects stay found; a massless region
/// leaves the flag unchanged.
bool abstract_find_transition(bool found, const CellAtLevel& region, const OctreeBelief& belief,
                              const ViewFrustum& frustum, std::span<const GridCell> blockers, Rng& rng);

/// k weighted ground samples from `region`; when a strict majority is
/// visible the sensor is consulted once and may report the object, otherwise
/// the label is Free.
VoxelLabel abstract_observation(int object_id, const CellAtLevel& region, const OctreeBelief& belief,
                                const ViewFrustum& frustum, std::span<const GridCell> blockers,
                                const SensorModel& sensor, int k, Rng& rng);

/// Generative model of one abstract instance, read against a fixed snapshot
/// of the per-object octree beliefs.
class AbstractProblem {
 public:
  using State = MosState;
  /// Per object: linear index (on the instance grid) of the detected cell, or -1.
  using Observation = std::vector<std::int32_t>;

  struct Outcome {
    MosState next;
    Observation observation;
    double reward = 0.0;
  };

  AbstractProblem(AbstractInstance instance, const DomainModel& model, std::span<const OctreeBelief> beliefs);

  const AbstractInstance& instance() const { return instance_; }
  /// Cached per robot cell, so a problem must not be shared between threads.
  const std::vector<Action>& actions(const MosState& s) const;
  Outcome generate(const MosState& s, const Action& a, Rng& rng) const;
  MosState sample_root(const RobotState& robot, Rng& rng) const;
  bool terminal(const MosState& s) const { return all_found(s); }

 private:
  std::vector<GridCell> blockers_for(const MosState& s) const;

  AbstractInstance instance_;
  const DomainModel* model_;
  std::span<const OctreeBelief> beliefs_;
  mutable std::vector<std::vector<Action>> action_cache_;  // by robot linear index
};

}  // namespace mos3d
