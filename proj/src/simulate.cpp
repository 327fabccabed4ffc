#include "teachctl/simulate.hpp"

#include <future>
#include <sstream>

#include "teachctl/error.hpp"
#include "teachctl/reports.hpp"
#include "teachctl/sim_harness.hpp"

namespace teachctl {

RunState run_simulation(const RunConfig& cfg, std::optional<std::size_t> stop_at) {
  cfg.validate();
  SyntheticPredictor predictor(cfg.scenario);
  RunState state = init_run_state(cfg.training, predictor);
  run_training(predictor, cfg.training, state, stop_at);
  return state;
}

RunState continue_simulation(const RunConfig& cfg, RunState state, std::optional<std::size_t> stop_at) {
  cfg.validate();
  SyntheticPredictor predictor(cfg.scenario);
  run_training(predictor, cfg.training, state, stop_at);
  return state;
}

void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunState& state) {
  std::ostringstream metrics, thresholds, schedule;
  write_metrics_csv(metrics, state.log);
  write_thresholds_csv(thresholds, state.log);
  write_schedule_csv(schedule, state.log, cfg.training.loop.total_epochs);
  write_text_file(dir / "metrics.csv", metrics.str());
  write_text_file(dir / "thresholds.csv", thresholds.str());
  write_text_file(dir / "schedule.csv", schedule.str());
  write_text_file(dir / "summary.json", summary_json(cfg, state).dump(2) + "\n");
}

namespace {

SimulationOutcome drive(const RunConfig& cfg, RunState state, const std::filesystem::path& dir,
                        const SimulateOptions& options) {
  SyntheticPredictor predictor(cfg.scenario);
  const std::size_t total = cfg.training.loop.total_iters();
  const std::size_t end = std::min(options.stop_after.value_or(total), total);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());

  while (state.iter < end) {
    std::size_t next = end;
    if (options.checkpoint_every > 0) {
      next = std::min(end, (state.iter / options.checkpoint_every + 1) * options.checkpoint_every);
    }
    run_training(predictor, cfg.training, state, next);
    if (options.checkpoint_every > 0 && state.iter < total) {
      save_checkpoint({cfg, state}, dir / "checkpoint.json");
    }
  }
  const bool finished = run_finished(cfg.training, state);
  if (!finished) save_checkpoint({cfg, state}, dir / "checkpoint.json");
  write_run_outputs(dir, cfg, state);
  return {std::move(state), finished, dir};
}

}  // namespace

SimulationOutcome simulate(const RunConfig& cfg, const SimulateOptions& options) {
  cfg.validate();
  SyntheticPredictor predictor(cfg.scenario);
  return drive(cfg, init_run_state(cfg.training, predictor), cfg.output_dir, options);
}

SimulationOutcome resume(Checkpoint cp, const std::filesystem::path& output_dir, const SimulateOptions& options) {
  cp.config.output_dir = output_dir.string();
  cp.config.validate();
  return drive(cp.config, std::move(cp.state), output_dir, options);
}

std::vector<SimulationOutcome> simulate_replicas(const RunConfig& cfg, std::size_t replicas,
                                                 const SimulateOptions& options) {
  if (replicas == 0) fail(ErrorKind::Config, "replicas: must be >= 1");
  std::vector<std::future<SimulationOutcome>> jobs;
  for (std::size_t i = 0; i < replicas; ++i) {
    RunConfig rc = cfg;
    rc.apply_seed(cfg.seed + i);
    rc.output_dir = (std::filesystem::path(cfg.output_dir) / ("seed_" + std::to_string(rc.seed))).string();
    jobs.push_back(std::async(std::launch::async, [rc, options] { return simulate(rc, options); }));
  }
  std::vector<SimulationOutcome> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace teachctl
