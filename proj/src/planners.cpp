#include "mos3d/planners.hpp"

#include <algorithm>
#include <exception>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <thread>

namespace mos3d {

std::string_view to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::MrPouct: return "mr-pouct";
    case PlannerKind::Pouct: return "pouct";
    case PlannerKind::OptionsPouct: return "options-pouct";
    case PlannerKind::Pomcp: return "pomcp";
    case PlannerKind::Exhaustive: return "exhaustive";
    case PlannerKind::Random: return "random";
  }
  return "?";
}

PlannerKind parse_planner(std::string_view name) {
  for (PlannerKind k : {PlannerKind::MrPouct, PlannerKind::Pouct, PlannerKind::OptionsPouct, PlannerKind::Pomcp,
                        PlannerKind::Exhaustive, PlannerKind::Random}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown planner '" + std::string(name) + "'");
}

std::vector<int> default_levels(int m) {
  std::vector<int> levels = m <= 8 ? std::vector<int>{0, 1} : std::vector<int>{0, 1, 2};
  const int top = max_level_for(m);
  std::erase_if(levels, [top](int l) { return l > top; });
  return levels;
}

std::vector<AbstractInstance> instances_for(PlannerKind kind, int m, std::span<const int> levels, int k_samples) {
  const int top = max_level_for(m);
  for (int l : levels) {
    if (l < 0 || l > top) throw std::invalid_argument("level " + std::to_string(l) + " out of range for m");
  }
  std::vector<AbstractInstance> out;
  switch (kind) {
    case PlannerKind::MrPouct:
      for (int l : levels) out.push_back(AbstractInstance::at_level(l, k_samples));
      if (out.empty()) throw std::invalid_argument("mr-pouct needs at least one level");
      break;
    case PlannerKind::Pouct:
    case PlannerKind::Pomcp:
      out.push_back(AbstractInstance::at_level(0, k_samples));
      break;
    case PlannerKind::OptionsPouct:
      for (int l : levels) out.push_back(AbstractInstance{0, l, k_samples});
      if (out.empty()) throw std::invalid_argument("options-pouct needs at least one level");
      break;
    case PlannerKind::Exhaustive:
    case PlannerKind::Random:
      break;
  }
  return out;
}

InstancePlan plan_instance(const AbstractInstance& instance, const DomainModel& model,
                           std::span<const OctreeBelief> beliefs, const RobotState& robot,
                           const PlannerConfig& config, std::uint64_t seed) {
  const AbstractProblem problem(instance, model, beliefs);
  Pouct<AbstractProblem, Action> tree(problem, config);
  Rng rng(seed);
  return tree.plan([&](Rng& r) { return problem.sample_root(robot, r); }, rng);
}

int select_best(std::span<const InstanceOutcome> outcomes) {
  int best = -1;
  double best_value = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const InstanceOutcome& o = outcomes[i];
    if (!o.plan || o.plan->fallback) continue;
    double value = 0.0;
    bool any = false;
    for (const auto& st : o.plan->root) {
      if (st.action == o.plan->action && st.visits > 0) {
        value = st.value;
        any = true;
      }
    }
    if (!any) continue;
    const int idx = static_cast<int>(i);
    if (best < 0 || value > best_value) {
      best = idx;
      best_value = value;
      continue;
    }
    if (value == best_value) {
      const AbstractInstance& cur = outcomes[static_cast<std::size_t>(best)].instance;
      if (o.instance.level < cur.level ||
          (o.instance.level == cur.level && o.instance.action_level < cur.action_level)) {
        best = idx;
      }
    }
  }
  return best;
}

MrPlanResult mr_pouct_plan(std::span<const AbstractInstance> instances, const DomainModel& model,
                           std::span<const OctreeBelief> beliefs, const RobotState& robot,
                           const PlannerConfig& config, Rng& rng, bool parallel) {
  if (instances.empty()) throw std::invalid_argument("instance set is empty");
  MrPlanResult result;
  std::vector<std::uint64_t> seeds;
  for (const AbstractInstance& inst : instances) {
    seeds.push_back(rng());
    result.instances.push_back({inst, std::nullopt, {}});
  }

  const auto run = [&](std::size_t i) {
    try {
      result.instances[i].plan = plan_instance(instances[i], model, beliefs, robot, config, seeds[i]);
    } catch (const std::exception& e) {
      result.instances[i].error = e.what();
    }
  };
  if (parallel && instances.size() > 1) {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < instances.size(); ++i) workers.emplace_back(run, i);
  } else {
    for (std::size_t i = 0; i < instances.size(); ++i) run(i);
  }

  result.chosen = select_best(result.instances);
  if (result.chosen < 0) {
    const auto prims = primitive_actions();
    result.action = prims[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(prims.size())))];
    result.fallback = true;
  } else {
    result.action = result.instances[static_cast<std::size_t>(result.chosen)].plan->action;
  }
  return result;
}

void write_diagnostics(std::ostream& out, int step, const MrPlanResult& result) {
  out << "step " << step << " chosen " << to_string(result.action) << (result.fallback ? " fallback" : "") << '\n';
  for (std::size_t i = 0; i < result.instances.size(); ++i) {
    const InstanceOutcome& o = result.instances[i];
    out << "  instance " << o.instance.name();
    if (!o.plan) {
      out << " failed: " << o.error << '\n';
      continue;
    }
    out << " sims " << o.plan->simulations << " best " << to_string(o.plan->action)
        << (static_cast<int>(i) == result.chosen ? " *" : "") << '\n';
    for (const auto& st : o.plan->root) {
      out << "    " << std::left << std::setw(22) << to_string(st.action) << " N=" << st.visits << " Q=" << st.value
          << '\n';
    }
  }
}

std::vector<Action> GroundProblem::actions(const MosState&) const {
  const auto prims = primitive_actions();
  return {prims.begin(), prims.end()};
}

GroundProblem::Outcome GroundProblem::generate(const MosState& s, const Action& a, Rng& rng) const {
  StepOutcome step = generative(s, a, *model_, rng);
  return {std::move(step.next), volumetric_key(step.observation, model_->m), step.reward};
}

std::vector<std::int32_t> volumetric_key(const FactoredObservation& obs, int m) {
  std::vector<std::pair<std::int32_t, std::int32_t>> entries;
  for (const LabeledVoxel& v : obs.voxels) {
    if (v.label.kind == LabelKind::Object) entries.emplace_back(linear_index(v.cell, m), v.label.object_id);
  }
  for (const GridCell& c : obs.raw.occluded) entries.emplace_back(linear_index(c, m), -1);
  std::sort(entries.begin(), entries.end());
  std::vector<std::int32_t> key;
  key.reserve(entries.size() * 2);
  for (const auto& [idx, label] : entries) {
    key.push_back(idx);
    key.push_back(label);
  }
  return key;
}

ParticleBelief ParticleBelief::from_beliefs(std::span<const OctreeBelief> beliefs, const RobotState& robot,
                                            std::size_t capacity, Rng& rng) {
  if (capacity == 0) throw std::invalid_argument("particle capacity must be positive");
  ParticleBelief out(capacity);
  out.particles_.reserve(capacity);
  for (std::size_t i = 0; i < capacity; ++i) {
    MosState s;
    s.robot = robot;
    for (const OctreeBelief& b : beliefs) s.objects.push_back(b.sample(0, rng).cell);
    out.particles_.push_back(std::move(s));
  }
  return out;
}

void ParticleBelief::reset(std::vector<MosState> particles, const RobotState& robot) {
  if (particles.size() > capacity_) particles.resize(capacity_);
  for (MosState& s : particles) s.robot = robot;
  particles_ = std::move(particles);
  if (particles_.empty()) deprived_ = true;
}

const MosState& ParticleBelief::draw(Rng& rng) const {
  if (particles_.empty()) throw std::logic_error("drawing from an empty particle set");
  return particles_[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(particles_.size())))];
}

InstancePlan pomcp_plan(PomcpTree& tree, const ParticleBelief& particles, Rng& rng) {
  if (particles.empty()) throw std::invalid_argument("POMCP needs a nonempty particle set");
  return tree.plan([&](Rng& r) { return particles.draw(r); }, rng);
}

ExecuteResult execute_step(Episode& env, const Action& a, std::span<OctreeBelief> beliefs, Rng& rng) {
  std::vector<Action> primitives;
  if (a.kind == ActionKind::MoveOp) {
    primitives = expand_moveop(env.state().robot.pose, a.goal, env.model().rewards).primitive_moves;
  } else {
    primitives.push_back(a);
  }

  ExecuteResult out;
  for (const Action& p : primitives) {
    if (env.done()) break;
    const double before = env.cumulative_reward();
    const FoundSet found_before = env.state().robot.found;
    Episode::StepResult step = env.step(p, rng);
    out.reward += step.reward;
    out.discounted_reward += env.cumulative_reward() - before;
    ++out.primitive_steps;
    if (p.kind == ActionKind::Look) belief_update_all(beliefs, p, step.observation, env.model().sensor, found_before);
    out.observation = std::move(step.observation);
  }
  return out;
}

}  // namespace mos3d
