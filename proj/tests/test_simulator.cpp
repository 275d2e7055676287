#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mos3d/simulator.hpp"

namespace mos3d {
namespace {

SensorModel perfect_sensor(double far) {
  SensorModel s;
  s.frustum.far = far;
  return s;
}

WorldSpec two_object_world() {
  WorldSpec w;
  w.m = 4;
  w.d = 4.0;
  w.objects = {{1, {{2, 1, 1}}}, {2, {{0, 3, 3}}}};
  w.robot_start = {{0, 1, 1}, Direction::PosY};
  return w;
}

TEST(GenerateWorld, IsDeterministicPerSeed) {
  const WorldSpec a = generate_world(4, 2, 4.0, 17);
  const WorldSpec b = generate_world(4, 2, 4.0, 17);
  EXPECT_EQ(world_to_json(a), world_to_json(b));
  EXPECT_NE(world_to_json(a), world_to_json(generate_world(4, 2, 4.0, 18)));
}

TEST(GenerateWorld, SmallGridsHaveSingleCellObjects) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const WorldSpec w = generate_world(4, 3, 4.0, seed);
    for (const WorldObject& o : w.objects) EXPECT_EQ(o.cells.size(), 1U);
  }
}

TEST(GenerateWorld, ObjectsAreDisjointBoxesInBounds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const WorldSpec w = generate_world(16, 6, 10.0, seed);
    ASSERT_EQ(w.n(), 6);
    std::set<GridCell> seen;
    for (const WorldObject& o : w.objects) {
      GridCell lo = o.cells.front(), hi = o.cells.front();
      for (const GridCell& c : o.cells) {
        EXPECT_TRUE(in_bounds(c, 16));
        EXPECT_TRUE(seen.insert(c).second);
        lo = {std::min(lo.x, c.x), std::min(lo.y, c.y), std::min(lo.z, c.z)};
        hi = {std::max(hi.x, c.x), std::max(hi.y, c.y), std::max(hi.z, c.z)};
      }
      const int dx = hi.x - lo.x + 1, dy = hi.y - lo.y + 1, dz = hi.z - lo.z + 1;
      EXPECT_LE(std::max({dx, dy, dz}), 2);
      EXPECT_EQ(static_cast<int>(o.cells.size()), dx * dy * dz);
    }
    EXPECT_FALSE(seen.contains(w.robot_start.position));
  }
}

TEST(GenerateWorld, CrowdedOrInvalidRequestsFail) {
  EXPECT_THROW(generate_world(2, 8, 4.0, 1), std::runtime_error);
  EXPECT_THROW(generate_world(6, 2, 4.0, 1), std::invalid_argument);
  EXPECT_THROW(generate_world(4, 0, 4.0, 1), std::invalid_argument);
}

TEST(Episode, DiscountedRewardAccumulates) {
  const WorldSpec w = two_object_world();
  Episode env(w, simulator_model(w, perfect_sensor(4.0)));
  Rng rng(1);
  env.step(Action::look(Direction::NegZ), rng);
  env.step(Action::look(Direction::NegZ), rng);
  EXPECT_NEAR(env.cumulative_reward(), -1.99, 1e-12);
  EXPECT_EQ(env.step_index(), 2);
}

TEST(Episode, FindingEveryObjectEndsTheEpisode) {
  const WorldSpec w = two_object_world();
  Episode env(w, simulator_model(w, perfect_sensor(4.0)));
  Rng rng(1);
  env.step(Action::look(Direction::PosX), rng);
  const auto r = env.step(Action::find(), rng);
  EXPECT_EQ(r.newly_found, 1);
  EXPECT_FALSE(env.done());
  // Object 2 at (0,3,3): go to (0,1,3) and look +y.
  env.step(Action::move(Direction::PosZ), rng);
  env.step(Action::move(Direction::PosZ), rng);
  env.step(Action::look(Direction::PosY), rng);
  env.step(Action::find(), rng);
  EXPECT_TRUE(env.done());
  EXPECT_EQ(env.termination(), Termination::AllFound);
  EXPECT_THROW(env.step(Action::look(Direction::PosX), rng), std::logic_error);
}

TEST(Episode, FindLimitCountsFailedFinds) {
  const WorldSpec w = two_object_world();
  Episode env(w, simulator_model(w, perfect_sensor(4.0)));
  Rng rng(1);
  env.step(Action::find(), rng);
  env.step(Action::find(), rng);
  EXPECT_TRUE(env.done());
  EXPECT_EQ(env.termination(), Termination::FindLimit);
  EXPECT_NEAR(env.cumulative_reward(), -1000.0 - 990.0, 1e-9);
}

TEST(Episode, StepAndTimeCaps) {
  const WorldSpec w = two_object_world();
  EpisodeLimits limits;
  limits.max_steps = 3;
  Episode env(w, simulator_model(w, perfect_sensor(4.0)), limits);
  Rng rng(1);
  for (int i = 0; i < 3; ++i) env.step(Action::look(Direction::NegZ), rng);
  EXPECT_EQ(env.termination(), Termination::StepLimit);

  limits = {};
  limits.total_time_budget = 1.0;
  Episode timed(w, simulator_model(w, perfect_sensor(4.0)), limits);
  timed.charge_time(0.6);
  EXPECT_FALSE(timed.done());
  timed.charge_time(0.6);
  EXPECT_EQ(timed.termination(), Termination::TimeLimit);
}

TEST(Episode, RejectsMoveOpAndMismatchedModels) {
  const WorldSpec w = two_object_world();
  Episode env(w, simulator_model(w, perfect_sensor(4.0)));
  Rng rng(1);
  EXPECT_THROW(env.step(Action::move_op({{0, 0, 0}, 1}), rng), std::invalid_argument);
  DomainModel wrong = simulator_model(w, perfect_sensor(4.0));
  wrong.m = 8;
  EXPECT_THROW(Episode(w, wrong), std::invalid_argument);
}

TEST(Episode, LogReproducesTheDiscountedReturnAndObjectsStayPut) {
  const WorldSpec w = generate_world(8, 3, 6.0, 5);
  Episode env(w, simulator_model(w, perfect_sensor(6.0)));
  Rng rng(9);
  while (!env.done()) env.step(random_policy(rng), rng);
  double total = 0.0;
  for (const StepRecord& r : env.log()) total += std::pow(0.99, r.t) * r.reward;
  EXPECT_NEAR(total, env.cumulative_reward(), 1e-9);
  EXPECT_EQ(env.state().objects, initial_state(w).objects);
  EXPECT_EQ(env.world().objects.size(), 3U);

  std::ostringstream out;
  env.write_log(out);
  int lines = 0;
  for (char c : out.str()) lines += c == '\n' ? 1 : 0;
  EXPECT_EQ(lines, env.step_index());
}

TEST(Exhaustive, SweepVisitsEveryCellThroughNeighbours) {
  const ExhaustivePolicy policy(4);
  const auto& sweep = policy.sweep();
  ASSERT_EQ(sweep.size(), 64U);
  EXPECT_EQ(std::set<GridCell>(sweep.begin(), sweep.end()).size(), 64U);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    const GridCell a = sweep[i - 1], b = sweep[i];
    EXPECT_EQ(std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z), 1);
  }
}

TEST(Exhaustive, DeclaresFindRightAfterSeeingAnObject) {
  WorldSpec w = two_object_world();
  w.robot_start = {{0, 0, 0}, Direction::PosX};
  w.objects[0].cells = {{1, 0, 0}};
  Episode env(w, simulator_model(w, perfect_sensor(4.0)));
  ExhaustivePolicy policy(4);
  Rng rng(1);
  const Action first = policy.next(env.state().robot, nullptr);
  ASSERT_EQ(first, Action::look(Direction::PosX));
  const auto r = env.step(first, rng);
  EXPECT_EQ(policy.next(env.state().robot, &r.observation), Action::find());
}

TEST(Exhaustive, FindsEverythingBeforeTheSweepEnds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const WorldSpec w = generate_world(4, 2, 4.0, seed);
    EpisodeLimits limits;
    limits.max_steps = 64 * 6 + 64 * 3 + 10;
    Episode env(w, simulator_model(w, perfect_sensor(4.0)), limits);
    ExhaustivePolicy policy(4);
    Rng rng(seed);
    std::optional<FactoredObservation> last;
    while (!env.done()) {
      const Action a = policy.next(env.state().robot, last ? &*last : nullptr);
      last = env.step(a, rng).observation;
    }
    EXPECT_EQ(env.termination(), Termination::AllFound) << "seed " << seed;
  }
}

TEST(RandomPolicy, UniformOverPrimitives) {
  Rng rng(123);
  std::map<std::string, int> counts;
  for (int i = 0; i < 13000; ++i) {
    const Action a = random_policy(rng);
    ASSERT_TRUE(a.is_primitive());
    ++counts[to_string(a)];
  }
  ASSERT_EQ(counts.size(), 13U);
  for (const auto& [name, c] : counts) EXPECT_NEAR(c, 1000, 120) << name;

  Rng a(5), b(5);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(random_policy(a), random_policy(b));
}

}  // namespace
}  // namespace mos3d
