#include "teachctl/checkpoint.hpp"

#include <fstream>

#include "teachctl/error.hpp"
#include "teachctl/state_json.hpp"

namespace teachctl {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "teachctl-checkpoint";

}  // namespace

json checkpoint_to_json(const Checkpoint& cp) {
  return {{"format", kFormat},
          {"schema_version", kCheckpointSchemaVersion},
          {"config", dump_config(cp.config)},
          {"rng", {{"scheme", "seed_seq(seed, stream, iteration)"}, {"seed", cp.config.seed}}},
          {"cursor", cp.state.iter},
          {"state", to_json(cp.state)}};
}

Checkpoint checkpoint_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != kFormat) {
    fail(ErrorKind::Data, "not a teachctl checkpoint");
  }
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer()) {
    fail(ErrorKind::Data, "checkpoint: missing schema_version");
  }
  const auto version = doc["schema_version"].get<std::int64_t>();
  if (version != kCheckpointSchemaVersion) {
    fail(ErrorKind::Data, "checkpoint: unsupported schema version " + std::to_string(version) + " (expected " +
                              std::to_string(kCheckpointSchemaVersion) + ")");
  }
  for (const char* key : {"config", "rng", "cursor", "state"}) {
    if (!doc.contains(key)) fail(ErrorKind::Data, std::string("checkpoint: missing field \"") + key + "\"");
  }
  Checkpoint cp;
  try {
    cp.config = parse_config(doc["config"]);
  } catch (const Error& e) {
    fail(ErrorKind::Data, std::string("checkpoint config: ") + e.what());
  }
  cp.state = run_state_from_json(doc["state"]);
  if (!doc["cursor"].is_number_unsigned() || doc["cursor"].get<std::size_t>() != cp.state.iter) {
    fail(ErrorKind::Data, "checkpoint: cursor disagrees with state");
  }
  if (doc["rng"].value("seed", cp.config.seed + 1) != cp.config.seed) {
    fail(ErrorKind::Data, "checkpoint: rng seed disagrees with config");
  }
  return cp;
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write checkpoint " + tmp.string());
    out << checkpoint_to_json(cp).dump() << '\n';
    if (!out) fail(ErrorKind::Io, "failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Data, "corrupt checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace teachctl
