// teachctl: simulate the teacher-student feedback controllers, replay their
// schedules, and filter detector dumps with per-class thresholds.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "teachctl/checkpoint.hpp"
#include "teachctl/coco_io.hpp"
#include "teachctl/error.hpp"
#include "teachctl/mask_scheduler.hpp"
#include "teachctl/reports.hpp"
#include "teachctl/run_config.hpp"
#include "teachctl/simulate.hpp"
#include "teachctl/vfst.hpp"

namespace {

using namespace teachctl;

std::optional<std::string> env(const char* name) {
  if (const char* v = std::getenv(name); v && *v) return std::string(v);
  return std::nullopt;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("teachctl");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const auto level = env("TEACHCTL_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(*level));
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_text_file(path, content);
  }
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> fixed_mask_ratio;
  std::optional<double> fixed_threshold;
  bool no_teacher = false;
  std::size_t replicas = 1;
  std::size_t checkpoint_every = 0;
  std::optional<std::size_t> stop_after;
  bool dump_config = false;
};

void log_outcome(const SimulationOutcome& o) {
  if (o.finished) {
    spdlog::info("finished {} iterations, outputs in {}", o.state.iter, o.output_dir.string());
  } else {
    spdlog::info("paused at iteration {}, checkpoint in {}", o.state.iter, (o.output_dir / "checkpoint.json").string());
  }
}

int run_simulate(const SimulateArgs& a) {
  RunConfig cfg = a.config.empty() ? default_run_config() : load_config(a.config);
  if (const auto dir = env("TEACHCTL_OUTPUT_DIR")) cfg.output_dir = *dir;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.seed) cfg.apply_seed(*a.seed);
  if (a.fixed_mask_ratio) cfg.training.ablation.fixed_mask_ratio = a.fixed_mask_ratio;
  if (a.fixed_threshold) cfg.training.ablation.fixed_threshold = a.fixed_threshold;
  if (a.no_teacher) cfg.training.ablation.no_teacher = true;
  cfg.validate();

  if (a.dump_config) {
    std::cout << dump_config(cfg).dump(2) << '\n';
    return 0;
  }
  SimulateOptions opts{a.stop_after, a.checkpoint_every};
  spdlog::debug("effective config: {}", dump_config(cfg).dump());
  if (a.replicas > 1) {
    for (const auto& o : simulate_replicas(cfg, a.replicas, opts)) log_outcome(o);
  } else {
    log_outcome(simulate(cfg, opts));
  }
  return 0;
}

int run_resume(const std::string& checkpoint, std::string out, std::optional<std::size_t> stop_after,
               std::size_t checkpoint_every) {
  Checkpoint cp = load_checkpoint(checkpoint);
  if (out.empty()) out = env("TEACHCTL_OUTPUT_DIR").value_or(cp.config.output_dir);
  spdlog::info("resuming at iteration {} of {}", cp.state.iter, cp.config.training.loop.total_iters());
  log_outcome(resume(std::move(cp), out, {stop_after, checkpoint_every}));
  return 0;
}

int run_schedule_trace(const std::string& config, std::optional<std::size_t> epochs, const std::string& losses_path,
                       const std::string& out) {
  SchedulerConfig sc = config.empty() ? default_run_config().training.scheduler
                                      : load_config(config).training.scheduler;
  if (epochs) sc.total_epochs = *epochs;
  sc.validate();

  std::vector<double> losses;
  if (!losses_path.empty()) {
    std::ifstream in(losses_path);
    if (!in) fail(ErrorKind::Io, "cannot open " + losses_path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        losses.push_back(std::stod(line));
      } catch (const std::exception&) {
        fail(ErrorKind::Data, losses_path + ": line " + std::to_string(n) + " is not a number");
      }
    }
    if (losses.size() < sc.total_epochs) {
      fail(ErrorKind::Data, losses_path + ": need one loss per epoch (" + std::to_string(sc.total_epochs) + ")");
    }
  }

  std::ostringstream csv;
  csv << "epoch,x,eta,mu\n";
  SchedulerState state = SchedulerState::initial(sc);
  for (std::size_t i = 1; i <= sc.total_epochs; ++i) {
    state = advance_epoch(sc, state);
    if (!losses.empty()) state = update_mask_ratio(sc, state, losses[i - 1]);
    const double x = static_cast<double>(i) / static_cast<double>(sc.total_epochs);
    csv << i << ',' << format_number(x) << ',' << format_number(state.eta) << ',' << format_number(state.mu) << '\n';
  }
  emit(out, csv.str());
  return 0;
}

int run_gamma_trace(std::size_t total_iters, double alpha_at, std::size_t every, const std::string& out) {
  VfstConfig literal;
  literal.alpha_at = alpha_at;
  literal.gamma_mode = GammaMode::Literal;
  literal.total_iters = total_iters;
  VfstConfig described = literal;
  described.gamma_mode = GammaMode::Described;
  literal.validate();

  std::ostringstream csv;
  csv << "iter,x,gamma_literal,gamma_described\n";
  for (std::size_t t = 0; t <= total_iters; t += every) {
    const double x = static_cast<double>(t) / static_cast<double>(total_iters);
    csv << t << ',' << format_number(x) << ',' << format_number(smoothing_coefficient(t, total_iters, literal)) << ','
        << format_number(smoothing_coefficient(t, total_iters, described)) << '\n';
  }
  emit(out, csv.str());
  return 0;
}

struct FilterArgs {
  std::string results;
  std::string thresholds;
  std::optional<double> threshold;
  std::string trajectory;
  std::string gt;
  std::string out = "-";
  std::string report;
  std::string metrics_csv;
  double iou = 0.5;
};

int run_filter(const FilterArgs& a) {
  ThresholdTable table;
  if (!a.thresholds.empty()) {
    table = parse_threshold_table(read_json_file(a.thresholds));
  } else if (!a.trajectory.empty()) {
    table = thresholds_from_trajectory_csv(a.trajectory);
  }
  if (a.threshold) table.fallback = a.threshold;
  if (table.per_class.empty() && !table.fallback) {
    fail(ErrorKind::Config, "filter: give --thresholds, --trajectory or --threshold");
  }

  const auto results = read_json_file(a.results);
  std::optional<nlohmann::json> gt;
  if (!a.gt.empty()) gt = read_json_file(a.gt);
  const auto res = filter_offline(results, table, gt ? &*gt : nullptr, a.iou);

  emit(a.out, res.kept_records.dump() + "\n");
  if (!a.report.empty()) write_text_file(a.report, res.report_json.dump(2) + "\n");
  if (!a.metrics_csv.empty()) {
    if (!res.metrics) fail(ErrorKind::Config, "filter: --metrics-csv needs --gt");
    std::ostringstream csv;
    write_class_metrics_csv(csv, *res.metrics);
    write_text_file(a.metrics_csv, csv.str());
  }
  spdlog::info("kept {} of {} detections", res.report.kept.size(), res.report_json["input"].get<std::size_t>());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Feedback-controlled teacher-student self-training simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the synthetic self-training scenario");
  simulate_cmd->add_option("-c,--config", sim.config, "Run configuration (JSON); defaults if omitted");
  simulate_cmd->add_option("-o,--out", sim.out, "Output directory (overrides TEACHCTL_OUTPUT_DIR and the config)");
  simulate_cmd->add_option("--seed", sim.seed, "Run seed");
  simulate_cmd->add_option("--fixed-mask-ratio", sim.fixed_mask_ratio, "Freeze the mask ratio at this value");
  simulate_cmd->add_option("--fixed-threshold", sim.fixed_threshold, "Freeze every class threshold at this value");
  simulate_cmd->add_flag("--no-teacher", sim.no_teacher, "Teacher mirrors the student; thresholds frozen");
  simulate_cmd->add_option("--replicas", sim.replicas, "Independent seeds to run concurrently")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--checkpoint-every", sim.checkpoint_every, "Write checkpoint.json every N iterations");
  simulate_cmd->add_option("--stop-after", sim.stop_after, "Pause after this many iterations");
  simulate_cmd->add_flag("--dump-config", sim.dump_config, "Print the effective configuration and exit");

  std::string cp_path, resume_out;
  std::optional<std::size_t> resume_stop;
  std::size_t resume_every = 0;
  auto* resume_cmd = app.add_subcommand("resume", "Continue a paused run from its checkpoint");
  resume_cmd->add_option("checkpoint", cp_path, "checkpoint.json")->required();
  resume_cmd->add_option("-o,--out", resume_out, "Output directory (default: the run's own)");
  resume_cmd->add_option("--stop-after", resume_stop, "Pause again after this many iterations");
  resume_cmd->add_option("--checkpoint-every", resume_every, "Write checkpoint.json every N iterations");

  FilterArgs fa;
  auto* filter_cmd = app.add_subcommand("filter", "Filter COCO-format detections with per-class thresholds");
  filter_cmd->add_option("results", fa.results, "COCO results JSON")->required();
  auto* thr_opt = filter_cmd->add_option("--thresholds", fa.thresholds, "JSON object {\"<category_id>\": N, \"default\": N}");
  filter_cmd->add_option("--trajectory", fa.trajectory, "thresholds.csv from simulate; final N per class")->excludes(thr_opt);
  filter_cmd->add_option("--threshold", fa.threshold, "Threshold for classes not otherwise listed");
  filter_cmd->add_option("--gt", fa.gt, "Ground truth (COCO annotations) for precision/recall/F1");
  filter_cmd->add_option("-o,--out", fa.out, "Filtered detections JSON (default stdout)");
  filter_cmd->add_option("--report", fa.report, "Filter report JSON");
  filter_cmd->add_option("--metrics-csv", fa.metrics_csv, "Per-class metrics CSV (needs --gt)");
  filter_cmd->add_option("--iou", fa.iou, "IoU match threshold")->check(CLI::Range(0.0, 1.0));

  std::string st_config, st_losses, st_out = "-";
  std::optional<std::size_t> st_epochs;
  auto* sched_cmd = app.add_subcommand("schedule-trace", "Dump the epoch,x,eta,mu table of the mask-ratio schedule");
  sched_cmd->add_option("-c,--config", st_config, "Run configuration (JSON)");
  sched_cmd->add_option("--epochs", st_epochs, "Override total epochs");
  sched_cmd->add_option("--losses", st_losses, "One loss per line, one per epoch, fed to the controller");
  sched_cmd->add_option("-o,--out", st_out, "CSV path (default stdout)");

  std::size_t gt_total = 100, gt_every = 1;
  double gt_alpha = 10.0;
  auto* gamma_cmd = app.add_subcommand("gamma-trace", "Dump the smoothing coefficient for both modes");
  std::string gt_out = "-";
  gamma_cmd->add_option("--total-iters", gt_total, "Total iterations")->check(CLI::PositiveNumber);
  gamma_cmd->add_option("--alpha-at", gt_alpha, "Logistic steepness");
  gamma_cmd->add_option("--every", gt_every, "Row spacing in iterations")->check(CLI::PositiveNumber);
  gamma_cmd->add_option("-o,--out", gt_out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*simulate_cmd) return run_simulate(sim);
    if (*resume_cmd) return run_resume(cp_path, resume_out, resume_stop, resume_every);
    if (*filter_cmd) return run_filter(fa);
    if (*sched_cmd) return run_schedule_trace(st_config, st_epochs, st_losses, st_out);
    if (*gamma_cmd) return run_gamma_trace(gt_total, gt_alpha, gt_every, gt_out);
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 4;
  }
  return 0;
}
