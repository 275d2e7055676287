#include "mos3d/grid_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mos3d {

namespace {

constexpr double kBoundaryEps = 1e-9;

constexpr int dot(const GridCell& a, const GridCell& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr GridCell cross(const GridCell& a, const GridCell& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr GridCell sub(const GridCell& a, const GridCell& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

}  // namespace

int max_level_for(int m) {
  if (!is_power_of_two(m)) {
    throw std::invalid_argument("grid size must be a power of two, got " + std::to_string(m));
  }
  int level = 0;
  while ((1 << level) < m) ++level;
  return level;
}

CellAtLevel level_ancestor(const GridCell& cell, int level) {
  if (level < 0) throw std::invalid_argument("level must be non-negative");
  return {{cell.x >> level, cell.y >> level, cell.z >> level}, level};
}

CellAtLevel level_ancestor(const CellAtLevel& cell, int level) {
  if (level < cell.level) throw std::invalid_argument("cannot refine a cell with level_ancestor");
  const int shift = level - cell.level;
  return {{cell.cell.x >> shift, cell.cell.y >> shift, cell.cell.z >> shift}, level};
}

std::vector<GridCell> ground_cells_of(const CellAtLevel& cell) {
  const int side = 1 << cell.level;
  const GridCell origin{cell.cell.x * side, cell.cell.y * side, cell.cell.z * side};
  std::vector<GridCell> out;
  out.reserve(static_cast<std::size_t>(side) * side * side);
  for (int z = 0; z < side; ++z)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) out.push_back({origin.x + x, origin.y + y, origin.z + z});
  return out;
}

GridCell center_ground_cell(const CellAtLevel& cell) {
  if (cell.level == 0) return cell.cell;
  const int side = 1 << cell.level;
  const int half = side / 2;
  return {cell.cell.x * side + half, cell.cell.y * side + half, cell.cell.z * side + half};
}

bool contains_ground(const CellAtLevel& region, const GridCell& cell) {
  return level_ancestor(cell, region.level).cell == region.cell;
}

GridCell unit_vector(Direction d) {
  switch (d) {
    case Direction::PosX: return {1, 0, 0};
    case Direction::NegX: return {-1, 0, 0};
    case Direction::PosY: return {0, 1, 0};
    case Direction::NegY: return {0, -1, 0};
    case Direction::PosZ: return {0, 0, 1};
    case Direction::NegZ: return {0, 0, -1};
  }
  return {1, 0, 0};
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::PosX: return "+x";
    case Direction::NegX: return "-x";
    case Direction::PosY: return "+y";
    case Direction::NegY: return "-y";
    case Direction::PosZ: return "+z";
    case Direction::NegZ: return "-z";
  }
  return "?";
}

std::optional<Direction> parse_direction(std::string_view text) {
  for (Direction d : kAllDirections) {
    if (to_string(d) == text) return d;
  }
  return std::nullopt;
}

bool FrustumParams::valid() const {
  return near > 0.0 && near < far && fov_angle_deg > 0.0 && fov_angle_deg < 180.0 && aspect > 0.0;
}

void FrustumParams::validate() const {
  if (!valid()) {
    throw std::invalid_argument("invalid frustum: need 0 < near < far, 0 < fov < 180, aspect > 0");
  }
}

ViewFrustum::ViewFrustum(const CameraPose& pose, const FrustumParams& params)
    : pose_(pose), params_(params) {
  params_.validate();
  forward_ = unit_vector(pose.direction);
  const bool vertical_view = pose.direction == Direction::PosZ || pose.direction == Direction::NegZ;
  up_ = vertical_view ? GridCell{1, 0, 0} : GridCell{0, 0, 1};
  right_ = cross(forward_, up_);
  tan_vertical_ = std::tan(params_.fov_angle_deg * std::numbers::pi / 360.0);
  tan_horizontal_ = tan_vertical_ * params_.aspect;
  raster_ = std::max(1, static_cast<int>(std::ceil(2.0 * params_.far)));
}

std::optional<Projection> ViewFrustum::project(const GridCell& cell) const {
  const GridCell v = sub(cell, pose_.position);
  const double depth = dot(v, forward_);
  if (depth < params_.near || depth >= params_.far) return std::nullopt;
  const double half_w = depth * tan_horizontal_;
  const double half_h = depth * tan_vertical_;
  const double a = dot(v, right_);
  const double b = dot(v, up_);
  if (std::abs(a) > half_w + kBoundaryEps || std::abs(b) > half_h + kBoundaryEps) return std::nullopt;
  const auto quantize = [this](double normalized) {
    const int p = static_cast<int>(std::floor((normalized + 1.0) * 0.5 * raster_));
    return std::clamp(p, 0, raster_ - 1);
  };
  return Projection{depth, quantize(b / half_h) * raster_ + quantize(a / half_w)};
}

void ViewFrustum::for_each_cell(
    int m, const std::function<void(const GridCell&, const Projection&)>& fn) const {
  const int first = static_cast<int>(std::ceil(params_.near));
  for (int k = first; k < params_.far; ++k) {
    const int reach_a = static_cast<int>(std::floor(k * tan_horizontal_ + kBoundaryEps));
    const int reach_b = static_cast<int>(std::floor(k * tan_vertical_ + kBoundaryEps));
    for (int b = -reach_b; b <= reach_b; ++b) {
      for (int a = -reach_a; a <= reach_a; ++a) {
        const GridCell c{pose_.position.x + k * forward_.x + a * right_.x + b * up_.x,
                         pose_.position.y + k * forward_.y + a * right_.y + b * up_.y,
                         pose_.position.z + k * forward_.z + a * right_.z + b * up_.z};
        if (!in_bounds(c, m)) continue;
        if (auto p = project(c)) fn(c, *p);
      }
    }
  }
}

std::size_t ViewFrustum::count_cells(int m) const {
  std::size_t count = 0;
  const int first = static_cast<int>(std::ceil(params_.near));
  for (int k = first; k < params_.far; ++k) {
    const int reach_a = static_cast<int>(std::floor(k * tan_horizontal_ + kBoundaryEps));
    const int reach_b = static_cast<int>(std::floor(k * tan_vertical_ + kBoundaryEps));
    for (int b = -reach_b; b <= reach_b; ++b) {
      for (int a = -reach_a; a <= reach_a; ++a) {
        const GridCell c{pose_.position.x + k * forward_.x + a * right_.x + b * up_.x,
                         pose_.position.y + k * forward_.y + a * right_.y + b * up_.y,
                         pose_.position.z + k * forward_.z + a * right_.z + b * up_.z};
        if (in_bounds(c, m)) ++count;
      }
    }
  }
  return count;
}

bool frustum_contains(const CameraPose& pose, const FrustumParams& params, const GridCell& cell) {
  return ViewFrustum(pose, params).contains(cell);
}

VisibilityResult compute_visibility(const CameraPose& pose, const FrustumParams& params, int m,
                                    const Occupancy& occupied) {
  const ViewFrustum frustum(pose, params);
  struct Entry {
    GridCell cell;
    Projection proj;
    int occupant;  // 0 = empty
  };
  std::vector<Entry> entries;
  frustum.for_each_cell(m, [&](const GridCell& c, const Projection& p) {
    auto it = occupied.find(c);
    entries.push_back({c, p, it == occupied.end() ? 0 : it->second});
  });

  // Nearest occupied depth per pixel.
  std::unordered_map<int, double> blocker_depth;
  for (const Entry& e : entries) {
    if (e.occupant == 0) continue;
    auto [it, inserted] = blocker_depth.try_emplace(e.proj.pixel, e.proj.depth);
    if (!inserted && e.proj.depth < it->second) it->second = e.proj.depth;
  }

  VisibilityResult result;
  for (const Entry& e : entries) {
    auto it = blocker_depth.find(e.proj.pixel);
    const bool behind = it != blocker_depth.end() && e.proj.depth > it->second;
    if (behind) {
      result.occluded.push_back(e.cell);
    } else if (e.occupant > 0) {
      result.visible_object.emplace(e.cell, e.occupant);
    } else {
      result.visible_free.push_back(e.cell);
    }
  }
  return result;
}

bool cell_visible(const ViewFrustum& frustum, const GridCell& target,
                  std::span<const GridCell> blockers) {
  const auto target_proj = frustum.project(target);
  if (!target_proj) return false;
  for (const GridCell& b : blockers) {
    if (b == target) continue;
    const auto p = frustum.project(b);
    if (p && p->pixel == target_proj->pixel && p->depth < target_proj->depth) return false;
  }
  return true;
}

std::size_t frustum_cell_count(const CameraPose& pose, const FrustumParams& params, int m) {
  return ViewFrustum(pose, params).count_cells(m);
}

double max_coverage_fraction(int m, const FrustumParams& params) {
  if (m < 2) throw std::invalid_argument("grid size must be at least 2");
  std::size_t best = 0;
  for (int z = 0; z < m; ++z)
    for (int y = 0; y < m; ++y)
      for (int x = 0; x < m; ++x)
        for (Direction d : kAllDirections) {
          best = std::max(best, ViewFrustum({{x, y, z}, d}, params).count_cells(m));
        }
  return static_cast<double>(best) / (static_cast<double>(m) * m * m);
}

}  // namespace mos3d
