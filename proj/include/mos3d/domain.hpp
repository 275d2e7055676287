#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mos3d/grid_geometry.hpp"
#include "mos3d/octree_belief.hpp"
#include "mos3d/random.hpp"

namespace mos3d {

/// Set of found object ids (1..64).
class FoundSet {
 public:
  bool contains(int id) const { return (bits_ >> (id - 1)) & 1U; }
  void insert(int id) { bits_ |= std::uint64_t{1} << (id - 1); }
  int size() const { return std::popcount(bits_); }
  std::uint64_t bits() const { return bits_; }

  friend bool operator==(const FoundSet&, const FoundSet&) = default;

 private:
  std::uint64_t bits_ = 0;
};

inline constexpr int kMaxObjects = 64;

struct RobotState {
  CameraPose pose;
  FoundSet found;

  friend bool operator==(const RobotState&, const RobotState&) = default;
};

/// Environment state. objects[i] is the cell of object id i + 1; planners may
/// hold these cells at a coarser level than the ground grid.
struct MosState {
  RobotState robot;
  std::vector<GridCell> objects;

  int num_objects() const { return static_cast<int>(objects.size()); }
  friend bool operator==(const MosState&, const MosState&) = default;
};

bool all_found(const MosState& s);

enum class ActionKind : std::uint8_t { Move, Look, Find, MoveOp };

struct Action {
  ActionKind kind = ActionKind::Find;
  Direction direction = Direction::PosX;  // Move / Look
  CellAtLevel goal;                       // MoveOp

  static Action move(Direction d) { return {ActionKind::Move, d, {}}; }
  static Action look(Direction d) { return {ActionKind::Look, d, {}}; }
  static Action find() { return {ActionKind::Find, Direction::PosX, {}}; }
  static Action move_op(const CellAtLevel& goal) { return {ActionKind::MoveOp, Direction::PosX, goal}; }

  bool is_primitive() const { return kind != ActionKind::MoveOp; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct ActionHash {
  std::size_t operator()(const Action& a) const noexcept;
};

/// The 13 primitive actions: six Moves, six Looks, Find.
std::span<const Action> primitive_actions();

std::string to_string(const Action& a);

struct SensorModel {
  double alpha = 1e5;
  double beta = 0.0;
  FrustumParams frustum;

  /// Probability that a visible object voxel is labeled with its id when
  /// simulating observations.
  double detection_probability() const { return alpha / (alpha + beta); }
  void validate() const;
};

struct RewardSpec {
  double r_max = 1000.0;
  double r_min = -1000.0;
  double r_step = -1.0;
  double gamma = 0.99;
};

/// Optional stochastic Move dynamics. Receives the intended destination and
/// returns the actual one.
using MoveNoise = std::function<GridCell(const GridCell& from, const GridCell& intended, int m, Rng& rng)>;

struct DomainModel {
  int m = 4;
  SensorModel sensor;
  RewardSpec rewards;
  std::vector<GridCell> obstacles;
  MoveNoise move_noise;
  /// When set, a Move into an obstacle or object cell leaves the robot in place.
  bool block_moves_into_occupied = false;
};

/// Cells covered by each object (index i is object i + 1). When absent, an
/// object occupies exactly its state cell.
using ObjectFootprints = std::vector<std::vector<GridCell>>;

/// Volumetric observation and its per-object factorization.
struct FactoredObservation {
  VisibilityResult raw;
  /// Sampled label of every non-occluded in-frustum voxel.
  std::vector<LabeledVoxel> voxels;
  /// per_object[i]: the same voxels seen from object i + 1, labels in {i + 1, Free}.
  std::vector<std::vector<LabeledVoxel>> per_object;

  bool empty() const { return raw.size() == 0; }
};

/// Ids of objects with at least one cell that is in the frustum of `pose`
/// and not hidden behind a nearer occupied cell.
std::vector<int> visible_objects(const CameraPose& pose, const MosState& s, const DomainModel& model,
                                 const ObjectFootprints* footprints = nullptr);

MosState transition(const MosState& s, const Action& a, const DomainModel& model, Rng& rng,
                    const ObjectFootprints* footprints = nullptr);

/// Only Look senses. Draws one Bernoulli(alpha / (alpha + beta)) per visible
/// object cell, in object-id order then footprint order.
FactoredObservation sample_observation(const MosState& next, const Action& a, const DomainModel& model,
                                       Rng& rng, const ObjectFootprints* footprints = nullptr);

double reward(const MosState& s, const Action& a, const MosState& next, const RewardSpec& rewards);

struct StepOutcome {
  MosState next;
  FactoredObservation observation;
  double reward = 0.0;
};

StepOutcome generative(const MosState& s, const Action& a, const DomainModel& model, Rng& rng,
                       const ObjectFootprints* footprints = nullptr);

/// Applies each object's factor of `obs` to its octree. Beliefs of objects in
/// `frozen` are left untouched.
void belief_update_all(std::span<OctreeBelief> beliefs, const Action& a, const FactoredObservation& obs,
                       const SensorModel& sensor, const FoundSet& frozen = {});

/// One Bernoulli draw; the shared sensor coin for every generative model.
inline bool sensor_fires(double p, Rng& rng) { return uniform01(rng) < p; }

/// Per object: linear index of the first cell labeled with its id, or -1.
std::vector<std::int32_t> detection_key(const FactoredObservation& obs, int num_objects, int m);

}  // namespace mos3d
