#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mos3d/bench.hpp"

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// MOS3D_LOG_LEVEL: quiet, info (default) or debug.
LogLevel log_level_from_env() {
  const char* raw = std::getenv("MOS3D_LOG_LEVEL");
  if (!raw) return LogLevel::Info;
  const std::string v(raw);
  if (v == "quiet" || v == "0") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mos3d;
  CLI::App app{"3D multi-object search benchmark"};
  ExperimentConfig cfg;
  std::string planner = "mr-pouct";
  std::string out_dir = "bench_out";
  std::string world_file;
  bool svg = false;

  app.add_option("--size", cfg.m, "Grid size m (power of two)");
  app.add_option("--num-objects", cfg.n, "Number of target objects n");
  app.add_option("--sensor-range", cfg.d, "Frustum far plane d");
  app.add_option("--alpha", cfg.alpha, "Detection weight alpha");
  app.add_option("--beta", cfg.beta, "Missed-detection weight beta");
  app.add_option("--planner", planner, "mr-pouct | pouct | options-pouct | pomcp | exhaustive | random");
  app.add_option("--levels", cfg.levels, "Resolution levels for the instance set")->delimiter(',');
  app.add_option("--k-samples", cfg.k_samples, "Samples per abstract observation");
  app.add_option("--time-per-step", cfg.time_per_step, "Planning seconds per step");
  app.add_option("--total-time", cfg.total_time, "Planning plus belief-update seconds per episode");
  app.add_option("--max-steps", cfg.max_steps, "Step cap per episode");
  app.add_option("--trials", cfg.trials, "Number of trials");
  app.add_option("--seed", cfg.seed, "Base seed; trial i uses seed + i");
  app.add_flag("--serial", cfg.serial, "Single-threaded deterministic run with a simulation budget");
  app.add_option("--sims-per-step", cfg.sims_per_step, "Simulations per planning step in serial mode");
  app.add_option("--workers", cfg.workers, "Concurrent trials (0: automatic)");
  app.add_option("--particles", cfg.particles, "POMCP particle capacity");
  app.add_option("--ucb", cfg.ucb_constant, "UCB exploration constant");
  app.add_option("--depth", cfg.max_depth, "Planning depth");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--world", world_file, "Replay a fixed world file (JSON)");
  app.add_flag("--svg", svg, "Also write summary.svg");
  bool logs = false;
  app.add_flag("--episode-logs", logs, "Write per-trial step logs under OUT/logs");
  app.add_flag("--diagnostics", cfg.diagnostics, "Write per-step planner dumps under OUT/logs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const LogLevel level = log_level_from_env();
  try {
    cfg.planner = parse_planner(planner);
    if (!world_file.empty()) {
      cfg.world = load_world(world_file);
      cfg.m = cfg.world->m;
      cfg.n = cfg.world->n();
    }
    if (logs || cfg.diagnostics) cfg.log_dir = std::filesystem::path(out_dir) / "logs";
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  if (level >= LogLevel::Info) {
    std::cerr << "running " << cfg.trials << " trial(s) of " << planner << " on (" << cfg.m << ',' << cfg.n << ','
              << cfg.d << ")" << (cfg.serial ? " serial" : "") << '\n';
  }
  try {
    const std::vector<TrialRecord> records = run_batch(cfg);
    int failed = 0;
    for (const TrialRecord& r : records) {
      if (r.details.failed) {
        ++failed;
        std::cerr << "trial " << r.result.trial << " failed: " << r.details.error << '\n';
      } else if (level >= LogLevel::Debug) {
        std::cerr << "trial " << r.result.trial << " reward " << r.result.reward << " found " << r.result.found
                  << " steps " << r.result.steps << " (" << r.details.termination << ")\n";
      }
    }
    emit_outputs(records, out_dir, svg);
    if (level >= LogLevel::Info) {
      for (const GroupSummary& g : aggregate([&] {
             std::vector<TrialResult> ok;
             for (const TrialRecord& r : records)
               if (!r.details.failed) ok.push_back(r.result);
             return ok;
           }())) {
        std::cerr << g.planner << " m=" << g.m << " n=" << g.n << ": reward " << g.reward.mean << " +- "
                  << g.reward.half_width << ", found " << g.found.mean << " +- " << g.found.half_width << " over "
                  << g.count << " trial(s)\n";
      }
      if (failed > 0) std::cerr << failed << " trial(s) failed\n";
      std::cerr << "wrote " << out_dir << "/results.csv\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
