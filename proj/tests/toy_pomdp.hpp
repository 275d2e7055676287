#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "mos3d/random.hpp"

namespace mos3d::toy {

// Two cells, one hidden object. Look reports the right cell with probability
// `accuracy` and costs 1; Find(i) ends the episode with +10 when correct and
// -100 otherwise.
enum class ToyAction : int { Look = 0, Find0 = 1, Find1 = 2 };

struct ToyState {
  int cell = 0;
  bool done = false;
};

struct ToyProblem {
  using State = ToyState;
  using Observation = int;  // 0 or 1 after Look, -1 otherwise

  struct Outcome {
    ToyState next;
    int observation = -1;
    double reward = 0.0;
  };

  double accuracy = 0.85;
  double look_cost = -1.0;
  double find_right = 10.0;
  double find_wrong = -100.0;

  std::vector<ToyAction> actions(const ToyState&) const {
    return {ToyAction::Look, ToyAction::Find0, ToyAction::Find1};
  }

  Outcome generate(const ToyState& s, ToyAction a, Rng& rng) const {
    if (a == ToyAction::Look) {
      const bool right = uniform01(rng) < accuracy;
      return {s, right ? s.cell : 1 - s.cell, look_cost};
    }
    const int guess = a == ToyAction::Find0 ? 0 : 1;
    return {{s.cell, true}, -1, guess == s.cell ? find_right : find_wrong};
  }

  bool terminal(const ToyState& s) const { return s.done; }
};

// Exact finite-horizon Q-values at belief p0 = Pr(cell 0) by full expansion
// of the observation tree.
inline double toy_value(const ToyProblem& p, double p0, int horizon, double gamma);

inline std::array<double, 3> toy_q(const ToyProblem& p, double p0, int horizon, double gamma) {
  std::array<double, 3> q{};
  q[1] = p0 * p.find_right + (1 - p0) * p.find_wrong;
  q[2] = (1 - p0) * p.find_right + p0 * p.find_wrong;
  if (horizon <= 1) {
    q[0] = p.look_cost;
    return q;
  }
  const double a = p.accuracy;
  const double pr0 = p0 * a + (1 - p0) * (1 - a);
  const double post0 = p0 * a / pr0;
  const double post1 = p0 * (1 - a) / (1 - pr0);
  q[0] = p.look_cost + gamma * (pr0 * toy_value(p, post0, horizon - 1, gamma) +
                                (1 - pr0) * toy_value(p, post1, horizon - 1, gamma));
  return q;
}

inline double toy_value(const ToyProblem& p, double p0, int horizon, double gamma) {
  if (horizon <= 0) return 0.0;
  const auto q = toy_q(p, p0, horizon, gamma);
  return *std::max_element(q.begin(), q.end());
}

inline ToyAction toy_optimal(const ToyProblem& p, double p0, int horizon, double gamma) {
  const auto q = toy_q(p, p0, horizon, gamma);
  return static_cast<ToyAction>(std::max_element(q.begin(), q.end()) - q.begin());
}

struct IntHash {
  std::size_t operator()(int v) const noexcept { return std::hash<int>{}(v); }
};

}  // namespace mos3d::toy
