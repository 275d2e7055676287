#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <unordered_map>
#include <vector>

#include "mos3d/random.hpp"

namespace mos3d {

struct PlannerConfig {
  double time_budget_per_step = 3.0;  // seconds
  int max_depth = 10;
  double ucb_constant = 1000.0;
  double discount = 0.99;
  /// When > 0, planning stops after this many simulations instead of on the
  /// wall clock. Used for deterministic runs.
  std::size_t max_simulations = 0;
};

template <class Action>
struct ActionStats {
  Action action;
  std::size_t visits = 0;
  double value = 0.0;
};

template <class Action>
struct PlanResult {
  Action action{};
  std::vector<ActionStats<Action>> root;
  std::size_t simulations = 0;
  double elapsed_seconds = 0.0;
  /// No simulation finished; `action` was drawn uniformly at random.
  bool fallback = false;
};

struct VectorKeyHash {
  std::size_t operator()(const std::vector<std::int32_t>& key) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int32_t v : key) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

/// Partially observable UCT over a black-box generative model.
///
/// Problem must provide:
///   using State; using Observation (hashable with ObsHash, equality comparable)
///   std::vector<Action> actions(const State&) const;
///   Outcome generate(const State&, const Action&, Rng&) const;  // {next, observation, reward}
///   bool terminal(const State&) const;
///
/// Each history node owns the action list of the first state that reached it;
/// untried actions are expanded in list order before UCB1 applies. New
/// history nodes are valued by a uniform-random rollout to max_depth.
template <class Problem, class Action, class ObsHash = VectorKeyHash>
class Pouct {
 public:
  using State = typename Problem::State;
  using Observation = typename Problem::Observation;
  using RootSampler = std::function<State(Rng&)>;

  Pouct(const Problem& problem, PlannerConfig config, bool keep_particles = false)
      : problem_(&problem), config_(config), keep_particles_(keep_particles) {}

  PlanResult<Action> plan(const RootSampler& sample_root, Rng& rng) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(config_.time_budget_per_step));
    root_ = std::make_unique<HistoryNode>();
    std::size_t sims = 0;
    while (true) {
      if (config_.max_simulations > 0) {
        if (sims >= config_.max_simulations) break;
      } else if (Clock::now() >= deadline) {
        break;
      }
      State s = sample_root(rng);
      if (root_->actions.empty()) expand(*root_, s);
      simulate(s, *root_, 0, rng);
      ++sims;
    }

    PlanResult<Action> result;
    result.simulations = sims;
    if (root_->actions.empty()) expand(*root_, sample_root(rng));
    double best = -std::numeric_limits<double>::infinity();
    for (const ActionNode& a : root_->actions) {
      result.root.push_back({a.action, a.visits, a.value});
      if (a.visits > 0 && a.value > best) {
        best = a.value;
        result.action = a.action;
      }
    }
    if (sims == 0 || best == -std::numeric_limits<double>::infinity()) {
      result.fallback = true;
      result.action = root_->actions[static_cast<std::size_t>(
                                         uniform_index(rng, static_cast<int>(root_->actions.size())))]
                          .action;
    }
    result.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
  }

  /// Next states recorded under root -> action -> observation during the last
  /// plan (only when constructed with keep_particles).
  const std::vector<State>* particles_after(const Action& action, const Observation& obs) const {
    if (!root_) return nullptr;
    for (const ActionNode& a : root_->actions) {
      if (!(a.action == action)) continue;
      auto it = a.children.find(obs);
      if (it == a.children.end()) return nullptr;
      return &it->second->particles;
    }
    return nullptr;
  }

  std::size_t root_visits() const { return root_ ? root_->visits : 0; }

 private:
  struct HistoryNode;

  struct ActionNode {
    Action action;
    std::size_t visits = 0;
    double value = 0.0;
    std::unordered_map<Observation, std::unique_ptr<HistoryNode>, ObsHash> children;
  };

  struct HistoryNode {
    std::size_t visits = 0;
    std::vector<ActionNode> actions;
    std::vector<State> particles;
  };

  void expand(HistoryNode& node, const State& s) {
    for (const Action& a : problem_->actions(s)) node.actions.push_back(ActionNode{a, 0, 0.0, {}});
  }

  ActionNode& select(HistoryNode& node) {
    for (ActionNode& a : node.actions) {
      if (a.visits == 0) return a;
    }
    const double log_n = std::log(static_cast<double>(node.visits));
    ActionNode* best = &node.actions.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (ActionNode& a : node.actions) {
      const double score = a.value + config_.ucb_constant * std::sqrt(log_n / static_cast<double>(a.visits));
      if (score > best_score) {
        best_score = score;
        best = &a;
      }
    }
    return *best;
  }

  double rollout(const State& s, int depth, Rng& rng) {
    double total = 0.0;
    double discount = 1.0;
    State cur = s;
    for (int d = depth; d < config_.max_depth && !problem_->terminal(cur); ++d) {
      const auto& actions = problem_->actions(cur);
      const Action& a = actions[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(actions.size())))];
      auto out = problem_->generate(cur, a, rng);
      total += discount * out.reward;
      discount *= config_.discount;
      cur = std::move(out.next);
    }
    return total;
  }

  double simulate(const State& s, HistoryNode& node, int depth, Rng& rng) {
    if (depth >= config_.max_depth || problem_->terminal(s)) return 0.0;
    if (node.actions.empty()) expand(node, s);
    ActionNode& a = select(node);
    auto out = problem_->generate(s, a.action, rng);

    double future = 0.0;
    auto [it, inserted] = a.children.try_emplace(out.observation, nullptr);
    if (inserted) {
      it->second = std::make_unique<HistoryNode>();
      if (keep_particles_ && depth == 0) it->second->particles.push_back(out.next);
      future = rollout(out.next, depth + 1, rng);
      it->second->visits += 1;
    } else {
      if (keep_particles_ && depth == 0) it->second->particles.push_back(out.next);
      future = simulate(out.next, *it->second, depth + 1, rng);
    }

    const double total = out.reward + config_.discount * future;
    node.visits += 1;
    a.visits += 1;
    a.value += (total - a.value) / static_cast<double>(a.visits);
    return total;
  }

  const Problem* problem_;
  PlannerConfig config_;
  bool keep_particles_;
  std::unique_ptr<HistoryNode> root_;
};

}  // namespace mos3d
