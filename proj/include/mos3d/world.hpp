#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "mos3d/domain.hpp"

namespace mos3d {

struct WorldObject {
  int id = 1;
  std::vector<GridCell> cells;
};

/// Ground-truth search region: objects, obstacles and the robot's start pose.
struct WorldSpec {
  int m = 4;
  double d = 4.0;
  std::uint64_t seed = 0;
  std::vector<WorldObject> objects;  // ids 1..n, in order
  std::vector<GridCell> obstacles;
  CameraPose robot_start;

  int n() const { return static_cast<int>(objects.size()); }
};

/// Throws std::invalid_argument if cells are out of bounds, overlap, or ids
/// are not 1..n in order.
void validate_world(const WorldSpec& world);

/// Footprint cell closest to the footprint's mean (first in sorted order on ties).
GridCell center_of_mass_cell(const std::vector<GridCell>& cells);

ObjectFootprints footprints_of(const WorldSpec& world);

/// Initial environment state: robot at its start pose, objects at their
/// center-of-mass cells, nothing found.
MosState initial_state(const WorldSpec& world);

nlohmann::json world_to_json(const WorldSpec& world);
WorldSpec world_from_json(const nlohmann::json& doc);

void save_world(const WorldSpec& world, const std::filesystem::path& path);
WorldSpec load_world(const std::filesystem::path& path);

}  // namespace mos3d
