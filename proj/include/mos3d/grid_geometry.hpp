#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mos3d {

/// A cell of the ground grid G. Coordinates lie in [0, m) on every axis.
struct GridCell {
  int x = 0;
  int y = 0;
  int z = 0;

  friend constexpr bool operator==(const GridCell&, const GridCell&) = default;
  friend constexpr auto operator<=>(const GridCell&, const GridCell&) = default;
};

struct GridCellHash {
  std::size_t operator()(const GridCell& c) const noexcept {
    auto h = static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x));
    h = h * 0x9E3779B97F4A7C15ULL + static_cast<std::uint32_t>(c.y);
    h = h * 0x9E3779B97F4A7C15ULL + static_cast<std::uint32_t>(c.z);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

constexpr bool in_bounds(const GridCell& c, int m) {
  return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < m && c.y < m && c.z < m;
}

constexpr int linear_index(const GridCell& c, int m) { return c.x + m * (c.y + m * c.z); }

constexpr GridCell cell_from_index(int index, int m) {
  return {index % m, (index / m) % m, index / (m * m)};
}

/// A cell of the level-l grid G^l. A level-l cell covers (2^l)^3 ground cells.
struct CellAtLevel {
  GridCell cell;
  int level = 0;

  friend constexpr bool operator==(const CellAtLevel&, const CellAtLevel&) = default;
  friend constexpr auto operator<=>(const CellAtLevel&, const CellAtLevel&) = default;
};

/// Number of cells per axis at `level` for a ground grid of size m.
constexpr int level_extent(int m, int level) { return m >> level; }

constexpr bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

/// log2(m) for a power-of-two grid size; the octree root level.
int max_level_for(int m);

/// phi_l: the level-l cell containing `cell`.
CellAtLevel level_ancestor(const GridCell& cell, int level);

/// Coarsen a cell that already sits at some level to a coarser one.
CellAtLevel level_ancestor(const CellAtLevel& cell, int level);

/// phi_l^{-1}: all ground cells covered by `cell`, in x-fastest order.
std::vector<GridCell> ground_cells_of(const CellAtLevel& cell);

/// Ground cell used as the representative "center" of a level cell: the
/// upper-middle cell on every axis (the cell itself at level 0).
GridCell center_ground_cell(const CellAtLevel& cell);

bool contains_ground(const CellAtLevel& region, const GridCell& cell);

enum class Direction : std::uint8_t { PosX, NegX, PosY, NegY, PosZ, NegZ };

inline constexpr std::array<Direction, 6> kAllDirections = {
    Direction::PosX, Direction::NegX, Direction::PosY,
    Direction::NegY, Direction::PosZ, Direction::NegZ};

GridCell unit_vector(Direction d);
std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

struct CameraPose {
  GridCell position;
  Direction direction = Direction::PosX;

  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

struct FrustumParams {
  double fov_angle_deg = 45.0;
  double aspect = 1.0;
  double near = 1.0;
  double far = 4.0;

  bool valid() const;
  /// Throws std::invalid_argument when the parameters do not describe a frustum.
  void validate() const;
};

/// Where an in-frustum cell lands: its depth along the view axis and its
/// pixel in the occlusion raster.
struct Projection {
  double depth = 0.0;
  int pixel = 0;
};

/// Viewing frustum anchored at the center of the camera cell.
///
/// The up vector is +z for horizontal view directions and +x for +-z. A cell
/// is inside iff its center satisfies near <= depth < far and lies within
/// both side-plane pairs. In-frustum centers are projected to normalized
/// far-plane coordinates and quantized onto an r x r raster, r = 2 * far.
class ViewFrustum {
 public:
  ViewFrustum(const CameraPose& pose, const FrustumParams& params);

  const CameraPose& pose() const { return pose_; }
  const FrustumParams& params() const { return params_; }
  int raster_size() const { return raster_; }

  bool contains(const GridCell& cell) const { return project(cell).has_value(); }
  std::optional<Projection> project(const GridCell& cell) const;

  /// Calls fn(cell, projection) for every in-bounds cell inside the frustum,
  /// ordered by increasing depth.
  void for_each_cell(int m, const std::function<void(const GridCell&, const Projection&)>& fn) const;

  std::size_t count_cells(int m) const;

 private:
  CameraPose pose_;
  FrustumParams params_;
  GridCell forward_;
  GridCell right_;
  GridCell up_;
  double tan_vertical_;
  double tan_horizontal_;
  int raster_;
};

/// Id used in occupancy maps for non-target obstacles. Object ids are >= 1.
inline constexpr int kObstacleId = -1;

using Occupancy = std::unordered_map<GridCell, int, GridCellHash>;

struct VisibilityResult {
  std::vector<GridCell> visible_free;
  std::unordered_map<GridCell, int, GridCellHash> visible_object;
  std::vector<GridCell> occluded;

  std::size_t size() const { return visible_free.size() + visible_object.size() + occluded.size(); }
};

/// Point-wise frustum membership of a single cell.
bool frustum_contains(const CameraPose& pose, const FrustumParams& params, const GridCell& cell);

/// Classifies every in-frustum cell of an m^3 grid. Per raster pixel the
/// nearest occupied cell is visible and everything behind it is occluded.
/// Visible obstacles are reported as free space.
VisibilityResult compute_visibility(const CameraPose& pose, const FrustumParams& params, int m,
                                    const Occupancy& occupied);

/// True iff `target` is in the frustum and no blocker shares its pixel at a
/// smaller depth. Blockers equal to `target` are ignored. Agrees with
/// compute_visibility for the same occupancy.
bool cell_visible(const ViewFrustum& frustum, const GridCell& target,
                  std::span<const GridCell> blockers);

std::size_t frustum_cell_count(const CameraPose& pose, const FrustumParams& params, int m);

/// Max over all camera poses of |in-frustum cells| / m^3.
double max_coverage_fraction(int m, const FrustumParams& params);

}  // namespace mos3d
