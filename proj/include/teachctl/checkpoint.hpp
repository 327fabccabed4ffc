#pragma once

#include <filesystem>

#include "json.hpp"
#include "teachctl/run_config.hpp"
#include "teachctl/teach_loop.hpp"

namespace teachctl {

inline constexpr int kCheckpointSchemaVersion = 1;

// Complete run snapshot. Randomness is derived per iteration from the run
// seed, so the seed plus the iteration cursor fully determine the RNG state.
struct Checkpoint {
  RunConfig config;
  RunState state;

  bool operator==(const Checkpoint&) const = default;
};

nlohmann::json checkpoint_to_json(const Checkpoint& cp);
// Rejects unknown schema versions and malformed documents (ErrorKind::Data).
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

// Writes through a temporary file and renames it into place.
void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace teachctl
