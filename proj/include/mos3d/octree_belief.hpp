#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mos3d/grid_geometry.hpp"
#include "mos3d/random.hpp"

namespace mos3d {

enum class LabelKind : std::uint8_t { Object, Free, Unknown };

/// Detection label d(v) of a voxel.
struct VoxelLabel {
  LabelKind kind = LabelKind::Free;
  int object_id = 0;  // meaningful only for LabelKind::Object

  static constexpr VoxelLabel object(int id) { return {LabelKind::Object, id}; }
  static constexpr VoxelLabel free() { return {LabelKind::Free, 0}; }
  static constexpr VoxelLabel unknown() { return {LabelKind::Unknown, 0}; }

  friend constexpr bool operator==(const VoxelLabel&, const VoxelLabel&) = default;
};

struct LabeledVoxel {
  GridCell cell;
  VoxelLabel label;

  friend constexpr bool operator==(const LabeledVoxel&, const LabeledVoxel&) = default;
};

/// Belief over one object's ground cell, stored as a lazily built octree of
/// unnormalized values plus a normalizer.
///
/// A node at level l that has never been touched holds the default value
/// 8^l * default_ground_value(). Materialized nodes always store the sum of
/// their eight children, so any level-l probability is Val(g^l) / Norm
/// without building the tree out. Updates touch O(log m) nodes per voxel and
/// sampling at any level visits at most max_level() nodes.
class OctreeBelief {
 public:
  /// Uniform belief over an m^3 grid (m a power of two, m >= 2).
  static OctreeBelief uniform(int m);

  /// Belief whose listed ground cells start at the given (unnormalized)
  /// weights; every other cell keeps weight 1.
  static OctreeBelief with_prior(int m, std::span<const std::pair<GridCell, double>> prior);

  OctreeBelief(const OctreeBelief& other);
  OctreeBelief& operator=(const OctreeBelief& other);
  OctreeBelief(OctreeBelief&&) noexcept = default;
  OctreeBelief& operator=(OctreeBelief&&) noexcept = default;
  ~OctreeBelief() = default;

  int grid_size() const { return m_; }
  int max_level() const { return max_level_; }
  double normalizer() const { return normalizer_; }
  double default_ground_value() const { return default_ground_; }

  /// Unnormalized value Val(g^l); never materializes nodes.
  double value_at(const CellAtLevel& cell) const;
  double prob_at(const CellAtLevel& cell) const { return value_at(cell) / normalizer_; }
  double prob_at(const GridCell& cell) const { return prob_at(CellAtLevel{cell, 0}); }

  /// Multiplies Val of every voxel labeled `object_id` by alpha and of every
  /// voxel labeled Free (or another object) by beta. Unknown voxels carry no
  /// information and are skipped. The normalizer is moved by the sum of
  /// value increments; ancestors are re-summed from their children.
  void update(std::span<const LabeledVoxel> observation, double alpha, double beta, int object_id);

  /// Exact sample from the level-`level` marginal. `node_visits`, when given,
  /// receives the number of tree levels descended.
  CellAtLevel sample(int level, Rng& rng, int* node_visits = nullptr) const;

  /// Samples a cell of `target_level` inside `region` with probability
  /// Val(cell) / Val(region). Returns nullopt when the region has no mass.
  /// Draws nothing from `rng` when target_level == region.level.
  std::optional<CellAtLevel> sample_within(const CellAtLevel& region, int target_level, Rng& rng) const;

  /// Divides every stored value, the default value and the normalizer by
  /// normalizer / m^3. Probabilities are unchanged.
  void renormalize();

  /// Multiplies every stored value, the default and the normalizer by c > 0.
  void scale(double c);

  std::size_t materialized_nodes() const;

  /// Calls fn(cell, value) for every materialized node, parents before children.
  template <class Fn>
  void for_each_materialized(Fn&& fn) const {
    visit(root_, CellAtLevel{{0, 0, 0}, max_level_}, fn);
  }

  void save(const std::filesystem::path& path) const;
  static OctreeBelief load(const std::filesystem::path& path);

  static constexpr double kRenormalizeAbove = 1e100;
  static constexpr double kRenormalizeBelow = 1e-100;

 private:
  struct Node {
    double value = 0.0;
    std::unique_ptr<Node[]> children;  // 8 entries or null
  };

  OctreeBelief(int m, double default_ground);

  double default_value(int level) const;
  void materialize_children(Node& node, int level) const;
  Node* descend_materialize(const GridCell& cell, std::vector<Node*>& path);
  CellAtLevel descend_sample(const Node* node, CellAtLevel from, int target_level, Rng& rng,
                            int* node_visits) const;
  static void copy_node(const Node& src, Node& dst);
  static void scale_node(Node& node, double factor);
  static std::size_t count_nodes(const Node& node);

  template <class Fn>
  static void visit(const Node& node, const CellAtLevel& cell, Fn& fn) {
    fn(cell, node.value);
    if (!node.children) return;
    for (int i = 0; i < 8; ++i) {
      const GridCell child{cell.cell.x * 2 + (i & 1), cell.cell.y * 2 + ((i >> 1) & 1),
                           cell.cell.z * 2 + ((i >> 2) & 1)};
      visit(node.children[i], CellAtLevel{child, cell.level - 1}, fn);
    }
  }

  int m_ = 0;
  int max_level_ = 0;
  double default_ground_ = 1.0;
  double normalizer_ = 0.0;
  Node root_;
};

}  // namespace mos3d
