#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "teachctl/sim_harness.hpp"
#include "teachctl/teach_loop.hpp"

namespace teachctl {

struct RunConfig {
  TrainingConfig training;
  ScenarioConfig scenario;
  std::string output_dir = "out";
  std::uint64_t seed = 7;

  // Copies the run seed into the training and scenario sections.
  void apply_seed(std::uint64_t s);
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

RunConfig default_run_config();

// Missing fields take defaults. Unknown fields, type mismatches and
// constraint violations throw ErrorKind::Config naming the field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

// Complete document: every field written, parse_config(dump_config(c)) == c.
nlohmann::json dump_config(const RunConfig& cfg);

}  // namespace teachctl
