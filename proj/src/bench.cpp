#include "mos3d/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

namespace mos3d {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

template <class T>
T parse_field(std::string_view text, std::string_view what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error("bad " + std::string(what) + " field '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

TrialResult blank_result(const ExperimentConfig& config, int index) {
  TrialResult r;
  r.trial = index;
  r.planner = std::string(to_string(config.planner));
  r.m = config.world ? config.world->m : config.m;
  r.n = config.world ? config.world->n() : config.n;
  r.d = config.d;
  r.alpha = config.alpha;
  r.beta = config.beta;
  r.seed = config.seed + static_cast<std::uint64_t>(index);
  return r;
}

Action random_primitive(Rng& rng) { return random_policy(rng); }

}  // namespace

void ExperimentConfig::validate() const {
  const int grid = world ? world->m : m;
  if (!is_power_of_two(grid) || grid < 2) throw std::invalid_argument("--size must be a power of two >= 2");
  const int objects = world ? world->n() : n;
  if (objects < 1 || objects > kMaxObjects) throw std::invalid_argument("--num-objects must be in [1, 64]");
  if (!(d > 1.0)) throw std::invalid_argument("--sensor-range must exceed the near plane (1)");
  if (!(alpha > 0.0)) throw std::invalid_argument("--alpha must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("--beta must be non-negative");
  if (!(time_per_step > 0.0)) throw std::invalid_argument("--time-per-step must be positive");
  if (!(total_time > 0.0)) throw std::invalid_argument("--total-time must be positive");
  if (max_steps < 1) throw std::invalid_argument("--max-steps must be >= 1");
  if (trials < 1) throw std::invalid_argument("--trials must be >= 1");
  if (k_samples < 1) throw std::invalid_argument("--k-samples must be >= 1");
  if (serial && sims_per_step == 0) throw std::invalid_argument("--sims-per-step must be positive");
  if (particles == 0) throw std::invalid_argument("particle capacity must be positive");
  if (max_depth < 1) throw std::invalid_argument("planning depth must be >= 1");
  if (world) validate_world(*world);
  const std::vector<int> lv = effective_levels();
  (void)instances_for(planner, grid, lv, k_samples);
}

std::vector<int> ExperimentConfig::effective_levels() const {
  const int grid = world ? world->m : m;
  return levels.empty() ? default_levels(grid) : levels;
}

SensorModel ExperimentConfig::sensor() const {
  SensorModel s;
  s.alpha = alpha;
  s.beta = beta;
  s.frustum.far = d;
  s.validate();
  return s;
}

TrialRecord run_trial(const ExperimentConfig& config, int index) {
  const auto wall_start = Clock::now();
  TrialRecord rec;
  rec.result = blank_result(config, index);
  const std::uint64_t seed = rec.result.seed;

  const WorldSpec world = config.world ? *config.world : generate_world(config.m, config.n, config.d, seed);
  const SensorModel sensor = config.sensor();
  const RewardSpec rewards;
  EpisodeLimits limits;
  limits.max_steps = config.max_steps;
  limits.total_time_budget = config.total_time;
  Episode env(world, simulator_model(world, sensor, rewards), limits);

  // The planner knows the static obstacles but not the objects.
  DomainModel plan_model;
  plan_model.m = world.m;
  plan_model.sensor = sensor;
  plan_model.rewards = rewards;
  plan_model.obstacles = world.obstacles;

  Rng env_rng(derive_seed(seed, 1));
  Rng agent_rng(derive_seed(seed, 2));

  std::vector<OctreeBelief> beliefs(static_cast<std::size_t>(world.n()), OctreeBelief::uniform(world.m));

  PlannerConfig pc;
  pc.time_budget_per_step = config.time_per_step;
  pc.max_depth = config.max_depth;
  pc.ucb_constant = config.ucb_constant;
  pc.discount = rewards.gamma;
  pc.max_simulations = config.serial ? config.sims_per_step : 0;

  const std::vector<int> levels = config.effective_levels();
  const std::vector<AbstractInstance> instances = instances_for(config.planner, world.m, levels, config.k_samples);
  const bool tree_search = !instances.empty();

  std::optional<ParticleBelief> particles;
  const GroundProblem ground(plan_model);
  if (config.planner == PlannerKind::Pomcp) {
    particles = ParticleBelief::from_beliefs(beliefs, env.state().robot, config.particles, agent_rng);
  }
  ExhaustivePolicy exhaustive(world.m);
  std::optional<FactoredObservation> last_obs;

  std::ofstream diag;
  if (config.diagnostics && !config.log_dir.empty()) {
    std::filesystem::create_directories(config.log_dir);
    diag = open_for_write(config.log_dir / ("trial_" + std::to_string(index) + "_planner.txt"));
  }

  TrialDetails& det = rec.details;
  int looks = 0;
  int planner_step = 0;
  while (!env.done()) {
    const auto plan_start = Clock::now();
    Action action;
    std::optional<PomcpTree> pomcp_tree;
    switch (config.planner) {
      case PlannerKind::MrPouct:
      case PlannerKind::Pouct:
      case PlannerKind::OptionsPouct: {
        const MrPlanResult plan =
            mr_pouct_plan(instances, plan_model, beliefs, env.state().robot, pc, agent_rng, !config.serial);
        if (plan.fallback) ++det.fallback_steps;
        if (diag.is_open()) write_diagnostics(diag, planner_step, plan);
        action = plan.action;
        break;
      }
      case PlannerKind::Pomcp:
        if (particles->deprived()) {
          action = random_primitive(agent_rng);
        } else {
          pomcp_tree.emplace(ground, pc, true);
          const InstancePlan plan = pomcp_plan(*pomcp_tree, *particles, agent_rng);
          if (plan.fallback) ++det.fallback_steps;
          action = plan.action;
        }
        break;
      case PlannerKind::Exhaustive:
        action = exhaustive.next(env.state().robot, last_obs ? &*last_obs : nullptr);
        break;
      case PlannerKind::Random:
        action = random_primitive(agent_rng);
        break;
    }
    const double planning = config.serial ? (tree_search ? config.time_per_step : 0.0) : seconds_since(plan_start);
    det.planning_time += planning;
    env.charge_time(planning);
    if (env.done()) break;

    const int found_before = env.state().robot.found.size();
    const auto exec_start = Clock::now();
    ExecuteResult ex = execute_step(env, action, beliefs, env_rng);
    if (!config.serial) {
      const double belief = seconds_since(exec_start);
      det.belief_time += belief;
      env.charge_time(belief);
    }

    if (action.kind == ActionKind::Look) ++looks;
    if (action.kind == ActionKind::Find) ++det.find_actions;
    if (det.first_find_step < 0) {
      det.looks_before_first_find = looks;
      if (env.state().robot.found.size() > found_before) det.first_find_step = env.step_index() - 1;
    }

    if (particles && !particles->deprived()) {
      const std::vector<MosState>* next =
          pomcp_tree ? pomcp_tree->particles_after(action, volumetric_key(ex.observation, world.m)) : nullptr;
      particles->reset(next ? *next : std::vector<MosState>{}, env.state().robot);
      if (particles->deprived()) {
        det.deprived = true;
        det.deprived_at_step = env.step_index();
      }
    }
    last_obs = std::move(ex.observation);
    ++planner_step;
  }

  det.termination = std::string(to_string(env.termination()));
  rec.result.steps = env.step_index();
  rec.result.reward = env.cumulative_reward();
  rec.result.found = env.state().robot.found.size();
  rec.result.wall_time = config.serial ? env.time_used() : seconds_since(wall_start);

  if (!config.log_dir.empty()) {
    std::filesystem::create_directories(config.log_dir);
    std::ofstream log = open_for_write(config.log_dir / ("trial_" + std::to_string(index) + ".jsonl"));
    env.write_log(log);
  }
  return rec;
}

std::vector<TrialRecord> run_batch(const ExperimentConfig& config) {
  config.validate();
  std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
  const auto guarded = [&](int i) {
    try {
      records[static_cast<std::size_t>(i)] = run_trial(config, i);
    } catch (const std::exception& e) {
      TrialRecord& r = records[static_cast<std::size_t>(i)];
      r.result = blank_result(config, i);
      r.details = {};
      r.details.failed = true;
      r.details.error = e.what();
      r.details.termination = "failed";
    }
  };

  if (config.serial) {
    for (int i = 0; i < config.trials; ++i) guarded(i);
    return records;
  }

  int workers = config.workers;
  if (workers <= 0) {
    const int hw = std::max(1U, std::thread::hardware_concurrency());
    const int per_trial = std::max<int>(
        1, static_cast<int>(instances_for(config.planner, config.world ? config.world->m : config.m,
                                          config.effective_levels(), config.k_samples)
                                .size()));
    workers = std::max(1, hw / per_trial);
  }
  workers = std::min(workers, config.trials);
  std::atomic<int> next{0};
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < config.trials; i = next++) guarded(i);
      });
    }
  }
  return records;
}

MeanCi mean_ci95(std::span<const double> values) {
  MeanCi out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  out.mean = sum / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  out.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(n);
  out.has_ci = true;
  return out;
}

std::vector<GroupSummary> aggregate(std::span<const TrialResult> results) {
  using Key = std::tuple<std::string, int, int, double, double, double>;
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const TrialResult& r : results) {
    auto& g = groups[Key{r.planner, r.m, r.n, r.d, r.alpha, r.beta}];
    g.first.push_back(r.reward);
    g.second.push_back(static_cast<double>(r.found));
  }
  std::vector<GroupSummary> out;
  for (auto& [key, values] : groups) {
    // Sorting makes the floating-point sums independent of trial order.
    std::sort(values.first.begin(), values.first.end());
    std::sort(values.second.begin(), values.second.end());
    GroupSummary s;
    std::tie(s.planner, s.m, s.n, s.d, s.alpha, s.beta) = key;
    s.count = static_cast<int>(values.first.size());
    s.reward = mean_ci95(values.first);
    s.found = mean_ci95(values.second);
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return {buf, ptr};
}

void write_results_csv(std::span<const TrialResult> results, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << kResultsHeader << '\n';
  for (const TrialResult& r : results) {
    out << r.trial << ',' << r.planner << ',' << r.m << ',' << r.n << ',' << format_double(r.d) << ','
        << format_double(r.alpha) << ',' << format_double(r.beta) << ',' << r.seed << ',' << r.steps << ','
        << format_double(r.reward) << ',' << r.found << ',' << format_double(r.wall_time) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<TrialResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  std::vector<TrialResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 12) throw std::runtime_error(path.string() + ": expected 12 columns");
    TrialResult r;
    r.trial = parse_field<int>(f[0], "trial");
    r.planner = std::string(f[1]);
    r.m = parse_field<int>(f[2], "m");
    r.n = parse_field<int>(f[3], "n");
    r.d = parse_field<double>(f[4], "d");
    r.alpha = parse_field<double>(f[5], "alpha");
    r.beta = parse_field<double>(f[6], "beta");
    r.seed = parse_field<std::uint64_t>(f[7], "seed");
    r.steps = parse_field<int>(f[8], "steps");
    r.reward = parse_field<double>(f[9], "reward");
    r.found = parse_field<int>(f[10], "found");
    r.wall_time = parse_field<double>(f[11], "wall_time");
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

void write_details_csv(std::span<const TrialRecord> records, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << "trial,seed,failed,termination,deprived,deprived_at_step,looks_before_first_find,first_find_step,"
         "find_actions,fallback_steps,planning_time,belief_time,error\n";
  for (const TrialRecord& r : records) {
    const TrialDetails& d = r.details;
    std::string error = d.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << r.result.trial << ',' << r.result.seed << ',' << (d.failed ? 1 : 0) << ',' << d.termination << ','
        << (d.deprived ? 1 : 0) << ',' << d.deprived_at_step << ',' << d.looks_before_first_find << ','
        << d.first_find_step << ',' << d.find_actions << ',' << d.fallback_steps << ','
        << format_double(d.planning_time) << ',' << format_double(d.belief_time) << ',' << error << '\n';
  }
}

void write_summary_csv(std::span<const GroupSummary> groups, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << "planner,m,n,d,alpha,beta,count,reward_mean,reward_ci95,found_mean,found_ci95,ci_flag\n";
  for (const GroupSummary& g : groups) {
    out << g.planner << ',' << g.m << ',' << g.n << ',' << format_double(g.d) << ',' << format_double(g.alpha)
        << ',' << format_double(g.beta) << ',' << g.count << ',' << format_double(g.reward.mean) << ','
        << (g.reward.has_ci ? format_double(g.reward.half_width) : "") << ',' << format_double(g.found.mean)
        << ',' << (g.found.has_ci ? format_double(g.found.half_width) : "") << ','
        << (g.reward.has_ci ? "ok" : "single_sample") << '\n';
  }
}

void write_series(std::span<const GroupSummary> groups, bool reward, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << "planner,m,n,d,alpha,beta,mean,ci_low,ci_high\n";
  for (const GroupSummary& g : groups) {
    const MeanCi& v = reward ? g.reward : g.found;
    const double h = v.has_ci ? v.half_width : 0.0;
    out << g.planner << ',' << g.m << ',' << g.n << ',' << format_double(g.d) << ',' << format_double(g.alpha)
        << ',' << format_double(g.beta) << ',' << format_double(v.mean) << ',' << format_double(v.mean - h) << ','
        << format_double(v.mean + h) << '\n';
  }
}

void write_svg(std::span<const GroupSummary> groups, const std::filesystem::path& path) {
  constexpr double kWidth = 640.0, kHeight = 360.0, kMargin = 50.0;
  double lo = 0.0, hi = 0.0;
  for (const GroupSummary& g : groups) {
    const double h = g.reward.has_ci ? g.reward.half_width : 0.0;
    lo = std::min(lo, g.reward.mean - h);
    hi = std::max(hi, g.reward.mean + h);
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  const auto y_of = [&](double v) { return kMargin + (hi - v) / (hi - lo) * (kHeight - 2 * kMargin); };
  std::ofstream out = open_for_write(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  out << "<text x=\"10\" y=\"20\" font-size=\"14\">discounted reward, mean and 95% CI</text>\n";
  const double slot = groups.empty() ? 0.0 : (kWidth - 2 * kMargin) / static_cast<double>(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const GroupSummary& g = groups[i];
    const double x = kMargin + slot * static_cast<double>(i) + slot * 0.15;
    const double w = slot * 0.7;
    const double y0 = y_of(0.0), y1 = y_of(g.reward.mean);
    out << "<rect x=\"" << x << "\" y=\"" << std::min(y0, y1) << "\" width=\"" << w << "\" height=\""
        << std::abs(y1 - y0) << "\" fill=\"#6a8caf\"/>\n";
    if (g.reward.has_ci) {
      const double cx = x + w / 2;
      out << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << y_of(g.reward.mean - g.reward.half_width)
          << "\" y2=\"" << y_of(g.reward.mean + g.reward.half_width) << "\" stroke=\"black\"/>\n";
    }
    out << "<text x=\"" << x << "\" y=\"" << kHeight - 15 << "\" font-size=\"10\">" << g.planner << " m=" << g.m
        << " n=" << g.n << "</text>\n";
  }
  out << "<line x1=\"" << kMargin << "\" x2=\"" << kWidth - kMargin << "\" y1=\"" << y_of(0.0) << "\" y2=\""
      << y_of(0.0) << "\" stroke=\"gray\"/>\n</svg>\n";
}

}  // namespace

void emit_outputs(std::span<const TrialRecord> records, const std::filesystem::path& dir, bool svg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<TrialResult> ok;
  for (const TrialRecord& r : records) {
    if (!r.details.failed) ok.push_back(r.result);
  }
  write_results_csv(ok, dir / "results.csv");
  write_details_csv(records, dir / "trial_details.csv");
  const std::vector<GroupSummary> groups = aggregate(ok);
  write_summary_csv(groups, dir / "summary.csv");
  write_series(groups, true, dir / "series_reward.csv");
  write_series(groups, false, dir / "series_found.csv");
  if (svg) write_svg(groups, dir / "summary.svg");
}

}  // namespace mos3d
