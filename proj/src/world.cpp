#include "mos3d/world.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace mos3d {

namespace {

nlohmann::json cell_json(const GridCell& c) { return nlohmann::json::array({c.x, c.y, c.z}); }

GridCell cell_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("cell must be [x, y, z]");
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()};
}

}  // namespace

void validate_world(const WorldSpec& world) {
  if (!is_power_of_two(world.m) || world.m < 2) throw std::invalid_argument("world size must be a power of two >= 2");
  if (world.objects.empty()) throw std::invalid_argument("world needs at least one object");
  if (world.n() > kMaxObjects) throw std::invalid_argument("too many objects");
  std::set<GridCell> seen;
  const auto claim = [&](const GridCell& c, const std::string& what) {
    if (!in_bounds(c, world.m)) throw std::invalid_argument(what + " cell out of bounds");
    if (!seen.insert(c).second) throw std::invalid_argument(what + " cell overlaps another occupied cell");
  };
  for (std::size_t i = 0; i < world.objects.size(); ++i) {
    const WorldObject& obj = world.objects[i];
    if (obj.id != static_cast<int>(i) + 1) throw std::invalid_argument("object ids must be 1..n in order");
    if (obj.cells.empty()) throw std::invalid_argument("object " + std::to_string(obj.id) + " has no cells");
    for (const GridCell& c : obj.cells) claim(c, "object");
  }
  for (const GridCell& c : world.obstacles) claim(c, "obstacle");
  if (!in_bounds(world.robot_start.position, world.m)) throw std::invalid_argument("robot start out of bounds");
}

GridCell center_of_mass_cell(const std::vector<GridCell>& cells) {
  if (cells.empty()) throw std::invalid_argument("empty footprint");
  double mx = 0, my = 0, mz = 0;
  for (const GridCell& c : cells) {
    mx += c.x;
    my += c.y;
    mz += c.z;
  }
  const double n = static_cast<double>(cells.size());
  mx /= n;
  my /= n;
  mz /= n;
  std::vector<GridCell> sorted = cells;
  std::sort(sorted.begin(), sorted.end());
  GridCell best = sorted.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const GridCell& c : sorted) {
    const double d = (c.x - mx) * (c.x - mx) + (c.y - my) * (c.y - my) + (c.z - mz) * (c.z - mz);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

ObjectFootprints footprints_of(const WorldSpec& world) {
  ObjectFootprints out;
  out.reserve(world.objects.size());
  for (const WorldObject& obj : world.objects) {
    std::vector<GridCell> cells = obj.cells;
    std::sort(cells.begin(), cells.end());
    out.push_back(std::move(cells));
  }
  return out;
}

MosState initial_state(const WorldSpec& world) {
  MosState s;
  s.robot.pose = world.robot_start;
  for (const WorldObject& obj : world.objects) s.objects.push_back(center_of_mass_cell(obj.cells));
  return s;
}

nlohmann::json world_to_json(const WorldSpec& world) {
  nlohmann::json objects = nlohmann::json::array();
  for (const WorldObject& obj : world.objects) {
    nlohmann::json cells = nlohmann::json::array();
    for (const GridCell& c : obj.cells) cells.push_back(cell_json(c));
    objects.push_back({{"id", obj.id}, {"cells", std::move(cells)}});
  }
  nlohmann::json obstacles = nlohmann::json::array();
  for (const GridCell& c : world.obstacles) obstacles.push_back(cell_json(c));
  return {{"m", world.m},
          {"d", world.d},
          {"seed", world.seed},
          {"objects", std::move(objects)},
          {"obstacles", std::move(obstacles)},
          {"robot",
           {{"position", cell_json(world.robot_start.position)},
            {"direction", std::string(to_string(world.robot_start.direction))}}}};
}

WorldSpec world_from_json(const nlohmann::json& doc) {
  WorldSpec world;
  world.m = doc.at("m").get<int>();
  world.d = doc.value("d", static_cast<double>(world.m));
  world.seed = doc.value("seed", std::uint64_t{0});
  for (const auto& obj : doc.at("objects")) {
    WorldObject o;
    o.id = obj.at("id").get<int>();
    for (const auto& c : obj.at("cells")) o.cells.push_back(cell_from(c));
    world.objects.push_back(std::move(o));
  }
  std::sort(world.objects.begin(), world.objects.end(),
            [](const WorldObject& a, const WorldObject& b) { return a.id < b.id; });
  if (doc.contains("obstacles")) {
    for (const auto& c : doc.at("obstacles")) world.obstacles.push_back(cell_from(c));
  }
  if (doc.contains("robot")) {
    const auto& robot = doc.at("robot");
    world.robot_start.position = cell_from(robot.at("position"));
    const auto dir = parse_direction(robot.value("direction", std::string("+x")));
    if (!dir) throw std::invalid_argument("bad robot direction");
    world.robot_start.direction = *dir;
  }
  validate_world(world);
  return world;
}

void save_world(const WorldSpec& world, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write world file " + path.string());
  out << world_to_json(world).dump(2) << '\n';
}

WorldSpec load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read world file " + path.string());
  return world_from_json(nlohmann::json::parse(in));
}

}  // namespace mos3d
