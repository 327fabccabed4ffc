#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "teachctl/checkpoint.hpp"
#include "teachctl/run_config.hpp"
#include "teachctl/teach_loop.hpp"

namespace teachctl {

struct SimulateOptions {
  std::optional<std::size_t> stop_after;  // absolute iteration at which to pause
  std::size_t checkpoint_every = 0;       // 0 disables periodic checkpoints
};

struct SimulationOutcome {
  RunState state;
  bool finished = false;
  std::filesystem::path output_dir;
};

// In-memory run on the synthetic scenario; no files touched.
RunState run_simulation(const RunConfig& cfg, std::optional<std::size_t> stop_at = std::nullopt);
RunState continue_simulation(const RunConfig& cfg, RunState state, std::optional<std::size_t> stop_at = std::nullopt);

// metrics.csv, thresholds.csv, schedule.csv and summary.json.
void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunState& state);

// Runs and writes outputs under cfg.output_dir. A paused run also leaves
// checkpoint.json there.
SimulationOutcome simulate(const RunConfig& cfg, const SimulateOptions& options = {});
SimulationOutcome resume(Checkpoint cp, const std::filesystem::path& output_dir, const SimulateOptions& options = {});

// n independent runs with seeds seed, seed+1, ... in <output_dir>/seed_<s>,
// executed concurrently.
std::vector<SimulationOutcome> simulate_replicas(const RunConfig& cfg, std::size_t replicas,
                                                 const SimulateOptions& options = {});

}  // namespace teachctl
