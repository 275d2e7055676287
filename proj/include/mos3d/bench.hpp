#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mos3d/planners.hpp"
#include "mos3d/world.hpp"

namespace mos3d {

struct ExperimentConfig {
  int m = 4;
  int n = 2;
  double d = 4.0;
  double alpha = 1e5;
  double beta = 0.0;
  PlannerKind planner = PlannerKind::MrPouct;
  double time_per_step = 0.5;  // seconds of planning per step
  double total_time = 60.0;    // planning plus belief update, per episode
  int max_steps = 500;
  int trials = 20;
  std::uint64_t seed = 0;
  std::vector<int> levels;  // empty: default_levels(m)
  int k_samples = 10;
  /// Single-threaded and deterministic: planners stop after sims_per_step
  /// simulations and each planning step is charged time_per_step of virtual
  /// time instead of the measured wall clock.
  bool serial = false;
  std::size_t sims_per_step = 1000;
  int workers = 0;  // trial pool size; 0: one per hardware thread
  std::size_t particles = 1000;
  int max_depth = 10;
  double ucb_constant = 1000.0;
  std::optional<WorldSpec> world;  // replay this world in every trial
  std::filesystem::path log_dir;   // per-episode logs when non-empty
  bool diagnostics = false;        // per-step planner dumps into log_dir

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
  std::vector<int> effective_levels() const;
  SensorModel sensor() const;
};

/// One row of results.csv.
struct TrialResult {
  int trial = 0;
  std::string planner;
  int m = 0;
  int n = 0;
  double d = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int steps = 0;
  double reward = 0.0;  // discounted cumulative
  int found = 0;
  double wall_time = 0.0;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Per-trial facts that do not belong to the fixed results schema.
struct TrialDetails {
  bool failed = false;
  std::string error;
  std::string termination;
  bool deprived = false;
  int deprived_at_step = -1;
  /// Looks executed before the first successful Find; all Looks of the
  /// episode when nothing was found (then first_find_step is -1).
  int looks_before_first_find = 0;
  int first_find_step = -1;
  int find_actions = 0;
  int fallback_steps = 0;
  double planning_time = 0.0;
  double belief_time = 0.0;
};

struct TrialRecord {
  TrialResult result;
  TrialDetails details;
};

/// Trial `index` of the batch: seed = config.seed + index. The world comes
/// from that seed unless the config supplies one.
TrialRecord run_trial(const ExperimentConfig& config, int index);

/// Runs all trials (a worker pool, or in order when serial). A trial that
/// throws is returned with details.failed set.
std::vector<TrialRecord> run_batch(const ExperimentConfig& config);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 95% two-sided, Student t
  bool has_ci = false;      // false for fewer than two samples
};

MeanCi mean_ci95(std::span<const double> values);

struct GroupSummary {
  std::string planner;
  int m = 0;
  int n = 0;
  double d = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  int count = 0;
  MeanCi reward;
  MeanCi found;
};

/// One group per (planner, m, n, d, alpha, beta), in sorted key order.
std::vector<GroupSummary> aggregate(std::span<const TrialResult> results);

inline constexpr const char* kResultsHeader = "trial,planner,m,n,d,alpha,beta,seed,steps,reward,found,wall_time";

void write_results_csv(std::span<const TrialResult> results, const std::filesystem::path& path);
std::vector<TrialResult> read_results_csv(const std::filesystem::path& path);

/// results.csv, trial_details.csv, summary.csv, series_reward.csv,
/// series_found.csv and, when `svg` is set, summary.svg under `dir`.
/// Throws std::runtime_error when a file cannot be written.
void emit_outputs(std::span<const TrialRecord> records, const std::filesystem::path& dir, bool svg = false);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace mos3d
