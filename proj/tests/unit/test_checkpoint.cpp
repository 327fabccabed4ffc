#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "teachctl/checkpoint.hpp"
#include "teachctl/error.hpp"
#include "teachctl/run_config.hpp"
#include "teachctl/simulate.hpp"

using namespace teachctl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RunConfig fifty_iterations() {
  return parse_config(json::parse(R"({"loop": {"total_epochs": 5, "iters_per_epoch": 10}, "seed": 21})"));
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("teachctl_ckpt_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind load_error(const fs::path& p) {
  try {
    load_checkpoint(p);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected load to fail");
  return ErrorKind::Config;
}

}  // namespace

TEST_CASE("save and load give an equal checkpoint") {
  auto dir = scratch("roundtrip");
  auto cfg = fifty_iterations();
  Checkpoint cp{cfg, run_simulation(cfg, 25)};
  save_checkpoint(cp, dir / "cp.json");
  CHECK(load_checkpoint(dir / "cp.json") == cp);
  CHECK_FALSE(fs::exists(dir / "cp.json.tmp"));
  auto doc = json::parse(slurp(dir / "cp.json"));
  CHECK(doc["schema_version"] == kCheckpointSchemaVersion);
  CHECK(doc["cursor"] == 25);
  CHECK(doc["rng"]["seed"] == 21);
}

TEST_CASE("resuming at 25 reproduces the uninterrupted 50-iteration run") {
  auto dir = scratch("resume");
  auto cfg = fifty_iterations();
  auto whole = run_simulation(cfg);
  save_checkpoint({cfg, run_simulation(cfg, 25)}, dir / "cp.json");
  auto cp = load_checkpoint(dir / "cp.json");
  auto resumed = continue_simulation(cp.config, cp.state);
  CHECK(resumed == whole);
}

TEST_CASE("damaged checkpoints are rejected") {
  auto dir = scratch("damaged");
  auto cfg = fifty_iterations();
  save_checkpoint({cfg, run_simulation(cfg, 10)}, dir / "cp.json");
  std::string text = slurp(dir / "cp.json");

  std::ofstream(dir / "truncated.json", std::ios::binary) << text.substr(0, text.size() / 2);
  CHECK(load_error(dir / "truncated.json") == ErrorKind::Data);

  auto doc = json::parse(text);
  doc["schema_version"] = 99;
  std::ofstream(dir / "version.json") << doc.dump();
  CHECK(load_error(dir / "version.json") == ErrorKind::Data);

  doc = json::parse(text);
  doc["cursor"] = 11;
  std::ofstream(dir / "cursor.json") << doc.dump();
  CHECK(load_error(dir / "cursor.json") == ErrorKind::Data);

  doc = json::parse(text);
  doc["format"] = "something-else";
  std::ofstream(dir / "format.json") << doc.dump();
  CHECK(load_error(dir / "format.json") == ErrorKind::Data);

  CHECK(load_error(dir / "missing.json") == ErrorKind::Io);
}

TEST_CASE("simulate pauses with a checkpoint and resume finishes the run") {
  auto dir = scratch("pause");
  auto cfg = fifty_iterations();
  cfg.output_dir = (dir / "full").string();
  simulate(cfg);

  auto paused_cfg = cfg;
  paused_cfg.output_dir = (dir / "paused").string();
  auto paused = simulate(paused_cfg, {.stop_after = 25});
  CHECK_FALSE(paused.finished);
  REQUIRE(fs::exists(dir / "paused" / "checkpoint.json"));
  auto done = resume(load_checkpoint(dir / "paused" / "checkpoint.json"), dir / "resumed");
  CHECK(done.finished);
  for (const char* f : {"metrics.csv", "thresholds.csv", "schedule.csv", "summary.json"}) {
    CHECK(slurp(dir / "resumed" / f) == slurp(dir / "full" / f));
  }
}
