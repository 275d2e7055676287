#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mos3d/abstraction.hpp"
#include "mos3d/domain.hpp"
#include "mos3d/octree_belief.hpp"
#include "mos3d/pouct.hpp"
#include "mos3d/simulator.hpp"

namespace mos3d {

enum class PlannerKind : std::uint8_t { MrPouct, Pouct, OptionsPouct, Pomcp, Exhaustive, Random };

std::string_view to_string(PlannerKind kind);
/// Accepts mr-pouct, pouct, options-pouct, pomcp, exhaustive, random.
PlannerKind parse_planner(std::string_view name);

/// Resolution levels used when none are configured: {0, 1} for m <= 8,
/// {0, 1, 2} beyond. Levels above the grid's maximum are dropped.
std::vector<int> default_levels(int m);

/// Instance set for a tree-search planner. MR-POUCT: one instance per level.
/// POUCT and POMCP: the ground instance. Options+POUCT: level-0 state and
/// observation with MoveOps at each configured level above 0.
std::vector<AbstractInstance> instances_for(PlannerKind kind, int m, std::span<const int> levels, int k_samples);

using InstancePlan = PlanResult<Action>;

/// One POUCT run on one abstract instance; the tree RNG is seeded by `seed`.
InstancePlan plan_instance(const AbstractInstance& instance, const DomainModel& model,
                           std::span<const OctreeBelief> beliefs, const RobotState& robot,
                           const PlannerConfig& config, std::uint64_t seed);

struct InstanceOutcome {
  AbstractInstance instance;
  std::optional<InstancePlan> plan;  // empty when the worker failed
  std::string error;
};

struct MrPlanResult {
  Action action;
  std::vector<InstanceOutcome> instances;
  int chosen = -1;  // index into instances, -1 on fallback
  bool fallback = false;
};

/// Index of the instance whose best root action has the largest Q. Ties go
/// to the lowest state level, then the lowest action level. Instances with
/// no completed plan or no simulations are skipped; -1 when none remain.
int select_best(std::span<const InstanceOutcome> outcomes);

/// Plans every instance against the same belief snapshot and returns the
/// action of maximal root value. Per-instance seeds are drawn from `rng` in
/// instance order. With `parallel` each instance runs on its own thread and
/// receives the full per-step budget.
MrPlanResult mr_pouct_plan(std::span<const AbstractInstance> instances, const DomainModel& model,
                           std::span<const OctreeBelief> beliefs, const RobotState& robot,
                           const PlannerConfig& config, Rng& rng, bool parallel);

/// Per-step planner dump: instance, simulations, root Q-table, chosen action.
void write_diagnostics(std::ostream& out, int step, const MrPlanResult& result);

/// Ground problem for POMCP. Observations are keyed by every non-Free voxel:
/// (linear index, object id) for detections and (linear index, -1) for
/// occluded voxels.
class GroundProblem {
 public:
  using State = MosState;
  using Observation = std::vector<std::int32_t>;

  struct Outcome {
    MosState next;
    Observation observation;
    double reward = 0.0;
  };

  explicit GroundProblem(const DomainModel& model) : model_(&model) {}

  std::vector<Action> actions(const MosState&) const;
  Outcome generate(const MosState& s, const Action& a, Rng& rng) const;
  bool terminal(const MosState& s) const { return all_found(s); }

 private:
  const DomainModel* model_;
};

std::vector<std::int32_t> volumetric_key(const FactoredObservation& obs, int m);

class ParticleBelief {
 public:
  explicit ParticleBelief(std::size_t capacity = 1000) : capacity_(capacity) {}

  /// `capacity` particles with object cells drawn from the ground level of
  /// each octree belief.
  static ParticleBelief from_beliefs(std::span<const OctreeBelief> beliefs, const RobotState& robot,
                                     std::size_t capacity, Rng& rng);

  const std::vector<MosState>& particles() const { return particles_; }
  std::size_t capacity() const { return capacity_; }
  bool deprived() const { return deprived_; }
  bool empty() const { return particles_.empty(); }

  /// Replaces the particle set (truncated to capacity) and overwrites each
  /// particle's robot state with the observed one. An empty set marks the
  /// belief deprived for good.
  void reset(std::vector<MosState> particles, const RobotState& robot);

  const MosState& draw(Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<MosState> particles_;
  bool deprived_ = false;
};

using PomcpTree = Pouct<GroundProblem, Action>;

/// POUCT with root states drawn uniformly from the particle set. Throws
/// std::invalid_argument on an empty set. Build `tree` with keep_particles
/// so the posterior can be read back via particles_after.

InstancePlan pomcp_plan(PomcpTree& tree, const ParticleBelief& particles, Rng& rng);

struct ExecuteResult {
  /// Sum over executed primitives of gamma^t * r_t at the episode's global t.
  double discounted_reward = 0.0;
  double reward = 0.0;
  int primitive_steps = 0;
  /// Observation of the last executed primitive (empty unless it was a Look).
  FactoredObservation observation;
};

/// Runs `a` in the episode, expanding a MoveOp into its primitive moves (the
/// expansion stops early if the episode ends), and updates the beliefs of
/// objects not yet found with each Look observation.
ExecuteResult execute_step(Episode& env, const Action& a, std::span<OctreeBelief> beliefs, Rng& rng);

}  // namespace mos3d
