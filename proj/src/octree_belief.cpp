#include "mos3d/octree_belief.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace mos3d {

namespace {

int child_index(const GridCell& child) { return (child.x & 1) | ((child.y & 1) << 1) | ((child.z & 1) << 2); }

/// Ancestor coordinates `shift` levels up.
GridCell shifted(const GridCell& c, int shift) { return {c.x >> shift, c.y >> shift, c.z >> shift}; }

}  // namespace

OctreeBelief::OctreeBelief(int m, double default_ground)
    : m_(m), max_level_(max_level_for(m)), default_ground_(default_ground) {
  if (m < 2) throw std::invalid_argument("octree belief needs m >= 2");
  root_.value = default_value(max_level_);
  normalizer_ = root_.value;
}

OctreeBelief OctreeBelief::uniform(int m) {
  if (!is_power_of_two(m)) {
    throw std::invalid_argument("octree belief needs a power-of-two grid size, got " + std::to_string(m));
  }
  return OctreeBelief(m, 1.0);
}

OctreeBelief OctreeBelief::with_prior(int m, std::span<const std::pair<GridCell, double>> prior) {
  OctreeBelief belief = uniform(m);
  std::vector<Node*> path;
  for (const auto& [cell, weight] : prior) {
    if (!in_bounds(cell, m)) throw std::out_of_range("prior cell out of bounds");
    if (!(weight >= 0.0) || !std::isfinite(weight)) throw std::invalid_argument("prior weight must be finite and >= 0");
    Node* leaf = belief.descend_materialize(cell, path);
    belief.normalizer_ += weight - leaf->value;
    leaf->value = weight;
    for (int level = 1; level <= belief.max_level_; ++level) {
      Node* node = path[static_cast<std::size_t>(level)];
      double sum = 0.0;
      for (int i = 0; i < 8; ++i) sum += node->children[i].value;
      node->value = sum;
    }
  }
  if (!(belief.normalizer_ > 0.0)) throw std::invalid_argument("prior has no mass");
  return belief;
}

OctreeBelief::OctreeBelief(const OctreeBelief& other)
    : m_(other.m_),
      max_level_(other.max_level_),
      default_ground_(other.default_ground_),
      normalizer_(other.normalizer_) {
  copy_node(other.root_, root_);
}

OctreeBelief& OctreeBelief::operator=(const OctreeBelief& other) {
  if (this != &other) {
    OctreeBelief tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void OctreeBelief::copy_node(const Node& src, Node& dst) {
  dst.value = src.value;
  if (!src.children) {
    dst.children.reset();
    return;
  }
  dst.children = std::make_unique<Node[]>(8);
  for (int i = 0; i < 8; ++i) copy_node(src.children[i], dst.children[i]);
}

double OctreeBelief::default_value(int level) const { return std::ldexp(default_ground_, 3 * level); }

void OctreeBelief::materialize_children(Node& node, int level) const {
  node.children = std::make_unique<Node[]>(8);
  const double child_value = default_value(level - 1);
  for (int i = 0; i < 8; ++i) node.children[i].value = child_value;
}

OctreeBelief::Node* OctreeBelief::descend_materialize(const GridCell& cell, std::vector<Node*>& path) {
  path.assign(static_cast<std::size_t>(max_level_) + 1, nullptr);
  Node* node = &root_;
  path[static_cast<std::size_t>(max_level_)] = node;
  for (int level = max_level_; level > 0; --level) {
    if (!node->children) materialize_children(*node, level);
    node = &node->children[child_index(shifted(cell, level - 1))];
    path[static_cast<std::size_t>(level - 1)] = node;
  }
  return node;
}

double OctreeBelief::value_at(const CellAtLevel& cell) const {
  if (cell.level < 0 || cell.level > max_level_ || !in_bounds(cell.cell, level_extent(m_, cell.level))) {
    throw std::out_of_range("cell outside the octree");
  }
  const Node* node = &root_;
  for (int level = max_level_; level > cell.level; --level) {
    if (!node->children) return default_value(cell.level);
    node = &node->children[child_index(shifted(cell.cell, level - 1 - cell.level))];
  }
  return node->value;
}

void OctreeBelief::update(std::span<const LabeledVoxel> observation, double alpha, double beta,
                          int object_id) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
  for (const LabeledVoxel& v : observation) {
    if (!in_bounds(v.cell, m_)) throw std::out_of_range("observed voxel out of bounds");
  }

  std::vector<Node*> path;
  for (const LabeledVoxel& v : observation) {
    if (v.label.kind == LabelKind::Unknown) continue;
    const bool hit = v.label.kind == LabelKind::Object && v.label.object_id == object_id;
    const double factor = hit ? alpha : beta;

    Node* leaf = descend_materialize(v.cell, path);
    const double before = leaf->value;
    leaf->value = factor * before;
    normalizer_ += leaf->value - before;
    for (int level = 1; level <= max_level_; ++level) {
      Node* node = path[static_cast<std::size_t>(level)];
      double sum = 0.0;
      for (int i = 0; i < 8; ++i) sum += node->children[i].value;
      node->value = sum;
    }
  }

  if (normalizer_ > kRenormalizeAbove || (normalizer_ > 0.0 && normalizer_ < kRenormalizeBelow)) {
    renormalize();
  }
}

CellAtLevel OctreeBelief::descend_sample(const Node* node, CellAtLevel from, int target_level, Rng& rng,
                                        int* node_visits) const {
  GridCell cell = from.cell;
  int visits = 0;
  for (int l = from.level; l > target_level; --l) {
    int pick = 0;
    if (node && node->children) {
      double total = 0.0;
      for (int i = 0; i < 8; ++i) total += node->children[i].value;
      const double r = uniform01(rng) * total;
      double acc = 0.0;
      pick = 7;
      for (int i = 0; i < 8; ++i) {
        acc += node->children[i].value;
        if (r < acc) {
          pick = i;
          break;
        }
      }
      // Rounding slack can leave r == total; never land on a zero-mass child.
      while (pick > 0 && node->children[pick].value <= 0.0) --pick;
      node = &node->children[pick];
    } else {
      // Below an untouched node all children carry the same default value.
      pick = uniform_index(rng, 8);
      node = nullptr;
    }
    cell = {cell.x * 2 + (pick & 1), cell.y * 2 + ((pick >> 1) & 1), cell.z * 2 + ((pick >> 2) & 1)};
    ++visits;
  }
  if (node_visits) *node_visits = visits;
  return {cell, target_level};
}

CellAtLevel OctreeBelief::sample(int level, Rng& rng, int* node_visits) const {
  if (level < 0 || level > max_level_) throw std::out_of_range("sample level out of range");
  if (!(root_.value > 0.0)) throw std::domain_error("cannot sample from a belief with no mass");
  return descend_sample(&root_, CellAtLevel{{0, 0, 0}, max_level_}, level, rng, node_visits);
}

std::optional<CellAtLevel> OctreeBelief::sample_within(const CellAtLevel& region, int target_level,
                                                       Rng& rng) const {
  if (target_level < 0 || target_level > region.level) throw std::out_of_range("bad target level");
  if (region.level > max_level_ || !in_bounds(region.cell, level_extent(m_, region.level))) {
    throw std::out_of_range("region outside the octree");
  }
  const Node* node = &root_;
  for (int level = max_level_; level > region.level && node; --level) {
    node = node->children ? &node->children[child_index(shifted(region.cell, level - 1 - region.level))]
                          : nullptr;
  }
  const double mass = node ? node->value : default_value(region.level);
  if (!(mass > 0.0)) return std::nullopt;
  return descend_sample(node, region, target_level, rng, nullptr);
}

void OctreeBelief::scale_node(Node& node, double factor) {
  node.value *= factor;
  if (!node.children) return;
  for (int i = 0; i < 8; ++i) scale_node(node.children[i], factor);
}

void OctreeBelief::scale(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("scale factor must be positive");
  scale_node(root_, c);
  default_ground_ *= c;
  normalizer_ *= c;
}

void OctreeBelief::renormalize() {
  if (!(normalizer_ > 0.0)) throw std::domain_error("cannot renormalize a belief with no mass");
  const double cells = static_cast<double>(m_) * m_ * m_;
  const double factor = normalizer_ / cells;
  if (factor == 1.0) return;
  const double inv = 1.0 / factor;
  scale_node(root_, inv);
  default_ground_ *= inv;
  normalizer_ = cells;
}

std::size_t OctreeBelief::count_nodes(const Node& node) {
  std::size_t n = 1;
  if (node.children) {
    for (int i = 0; i < 8; ++i) n += count_nodes(node.children[i]);
  }
  return n;
}

std::size_t OctreeBelief::materialized_nodes() const { return count_nodes(root_); }

void OctreeBelief::save(const std::filesystem::path& path) const {
  nlohmann::json nodes = nlohmann::json::array();
  for_each_materialized([&](const CellAtLevel& c, double value) {
    nodes.push_back({c.level, c.cell.x, c.cell.y, c.cell.z, value});
  });
  nlohmann::json doc{{"m", m_},
                     {"normalizer", normalizer_},
                     {"default_ground_value", default_ground_},
                     {"nodes", std::move(nodes)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write belief snapshot " + path.string());
  out << doc.dump(1) << '\n';
}

OctreeBelief OctreeBelief::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read belief snapshot " + path.string());
  const nlohmann::json doc = nlohmann::json::parse(in);
  OctreeBelief belief = uniform(doc.at("m").get<int>());
  belief.default_ground_ = doc.at("default_ground_value").get<double>();
  belief.root_.value = belief.default_value(belief.max_level_);
  belief.normalizer_ = doc.at("normalizer").get<double>();
  for (const auto& entry : doc.at("nodes")) {
    const CellAtLevel c{{entry.at(1).get<int>(), entry.at(2).get<int>(), entry.at(3).get<int>()},
                        entry.at(0).get<int>()};
    const double value = entry.at(4).get<double>();
    Node* node = &belief.root_;
    for (int level = belief.max_level_; level > c.level; --level) {
      if (!node->children) belief.materialize_children(*node, level);
      node = &node->children[child_index(shifted(c.cell, level - 1 - c.level))];
    }
    node->value = value;
  }
  return belief;
}

}  // namespace mos3d
