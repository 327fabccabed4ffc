#include "teachctl/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "teachctl/error.hpp"

namespace teachctl {

using nlohmann::json;

namespace {

// Reads fields from one JSON object and rejects anything left unread.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(ErrorKind::Config, label() + ": expected a JSON object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  template <typename T>
  void read(const char* key, T& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    const json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
        out = v.get<double>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if (std::is_unsigned_v<T> && !v.is_number_unsigned()) {
          throw std::invalid_argument("expected a non-negative integer");
        }
        out = v.get<T>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
        out = v.get<std::string>();
      } else {
        out = v.get<T>();
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(ErrorKind::Config, field(key) + ": " + e.what());
    }
  }

  void read_optional_ratio(const char* key, std::optional<double>& out) {
    if (!obj_.contains(key)) return;
    if (obj_.at(key).is_null()) {
      used_.insert(key);
      out.reset();
      return;
    }
    double v = 0.0;
    read(key, v);
    out = v;
  }

  const json* child(const char* key) {
    if (!obj_.contains(key)) return nullptr;
    used_.insert(key);
    return &obj_.at(key);
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!used_.contains(key)) fail(ErrorKind::Config, field(key.c_str()) + ": unknown field");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void parse_scheduler(const json& j, TrainingConfig& t, bool& epochs_given, std::size_t& epochs) {
  ObjectReader r(j, "scheduler");
  auto& s = t.scheduler;
  r.read("eta_min", s.eta_min);
  r.read("eta_max", s.eta_max);
  r.read("steepness", s.steepness);
  r.read("midpoint", s.midpoint);
  r.read("mu_0", s.mu_0);
  r.read("mu_min", s.mu_min);
  r.read("mu_max", s.mu_max);
  r.read("loss_window", s.loss_window);
  epochs_given = r.has("total_epochs");
  r.read("total_epochs", epochs);
  std::string loss = to_string(t.scheduler_loss);
  r.read("loss_source", loss);
  t.scheduler_loss = scheduler_loss_from_string(loss);
  std::string cadence = to_string(t.mu_cadence);
  r.read("mu_update", cadence);
  t.mu_cadence = mu_cadence_from_string(cadence);
  r.finish();
}

void parse_vfst(const json& j, VfstConfig& v, bool& iters_given, std::size_t& iters) {
  ObjectReader r(j, "vfst");
  r.read("alpha_dt", v.alpha_dt);
  r.read("beta", v.beta);
  r.read("min_dt", v.min_dt);
  r.read("max_dt", v.max_dt);
  r.read("alpha_at", v.alpha_at);
  std::string mode = to_string(v.gamma_mode);
  r.read("gamma_mode", mode);
  v.gamma_mode = gamma_mode_from_string(mode);
  r.read("stats_floor", v.stats_floor);
  r.read("n_init", v.n_init);
  iters_given = r.has("total_iters");
  r.read("total_iters", iters);
  r.finish();
}

void parse_loop(const json& j, LoopConfig& l, bool& srs_given) {
  ObjectReader r(j, "loop");
  r.read("total_epochs", l.total_epochs);
  r.read("iters_per_epoch", l.iters_per_epoch);
  r.read("momentum", l.momentum);
  if (const json* srs = r.child("srs_epochs")) {
    if (!srs->is_array()) fail(ErrorKind::Config, "loop.srs_epochs: expected an array of epoch indices");
    l.srs_epochs.clear();
    for (const auto& e : *srs) {
      if (!e.is_number_unsigned()) fail(ErrorKind::Config, "loop.srs_epochs: entries must be non-negative integers");
      l.srs_epochs.insert(e.get<std::size_t>());
    }
    srs_given = true;
  }
  r.finish();
}

void parse_decoder(const json& j, DecoderSettings& d) {
  ObjectReader r(j, "decoder");
  r.read("hidden_dim", d.hidden_dim);
  r.read("lr", d.lr);
  r.read("mask_token", d.mask_token);
  r.finish();
}

void parse_ablation(const json& j, AblationModes& a) {
  ObjectReader r(j, "ablation");
  r.read_optional_ratio("fixed_mask_ratio", a.fixed_mask_ratio);
  r.read_optional_ratio("fixed_threshold", a.fixed_threshold);
  r.read("no_teacher", a.no_teacher);
  r.finish();
}

void parse_scenario(const json& j, ScenarioConfig& s) {
  ObjectReader r(j, "scenario");
  if (const json* classes = r.child("classes")) {
    if (!classes->is_array()) fail(ErrorKind::Config, "scenario.classes: expected an array");
    s.classes.clear();
    for (std::size_t i = 0; i < classes->size(); ++i) {
      ObjectReader c((*classes)[i], "scenario.classes[" + std::to_string(i) + "]");
      ClassScenario cs;
      if (!c.has("id")) fail(ErrorKind::Config, c.field("id") + ": required");
      c.read("id", cs.id);
      c.read("name", cs.name);
      c.read("prevalence", cs.prevalence);
      c.read("mean_start", cs.mean_start);
      c.read("mean_end", cs.mean_end);
      c.read("var_start", cs.var_start);
      c.read("var_end", cs.var_end);
      c.finish();
      s.classes.push_back(cs);
    }
  }
  r.read("correctness_exponent", s.correctness_exponent);
  r.read("detections_per_iter", s.detections_per_iter);
  if (const json* g = r.child("grid")) {
    ObjectReader gr(*g, "scenario.grid");
    gr.read("cols", s.grid.cols);
    gr.read("rows", s.grid.rows);
    gr.read("cell", s.grid.cell);
    gr.read("box_fraction", s.grid.box_fraction);
    gr.read("jitter", s.grid.jitter);
    gr.finish();
  }
  if (const json* p = r.child("pyramid")) {
    ObjectReader pr(*p, "scenario.pyramid");
    pr.read("channels", s.pyramid.channels);
    if (const json* levels = pr.child("levels")) {
      if (!levels->is_array()) fail(ErrorKind::Config, "scenario.pyramid.levels: expected [[h, w], ...]");
      s.pyramid.levels.clear();
      for (const auto& lv : *levels) {
        if (!lv.is_array() || lv.size() != 2 || !lv[0].is_number_unsigned() || !lv[1].is_number_unsigned()) {
          fail(ErrorKind::Config, "scenario.pyramid.levels: expected [[h, w], ...]");
        }
        s.pyramid.levels.emplace_back(lv[0].get<std::size_t>(), lv[1].get<std::size_t>());
      }
    }
    pr.read("latent_rank", s.pyramid.latent_rank);
    pr.read("noise", s.pyramid.noise);
    pr.finish();
  }
  if (const json* l = r.child("learning")) {
    ObjectReader lr(*l, "scenario.learning");
    auto& m = s.learning;
    lr.read("source_representation", m.source_representation);
    lr.read("skill_rate", m.skill_rate);
    lr.read("representation_rate", m.representation_rate);
    lr.read("mask_target_low", m.mask_target_low);
    lr.read("mask_target_high", m.mask_target_high);
    lr.read("mask_tolerance", m.mask_tolerance);
    lr.read("mean_cap", m.mean_cap);
    lr.finish();
  }
  r.finish();
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  training.seed = s;
  scenario.seed = s;
}

void RunConfig::validate() const {
  training.validate();
  scenario.validate();
  if (training.seed != seed || scenario.seed != seed) fail(ErrorKind::Config, "seed: sections disagree");
  if (output_dir.empty()) fail(ErrorKind::Config, "output_dir: must not be empty");
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.scenario = ScenarioConfig::default_imbalanced();
  cfg.training.loop.srs_epochs = LoopConfig::default_srs_epochs(cfg.training.loop.total_epochs);
  cfg.training.scheduler.total_epochs = cfg.training.loop.total_epochs;
  cfg.training.vfst.total_iters = cfg.training.loop.total_iters();
  cfg.apply_seed(cfg.seed);
  return cfg;
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg = default_run_config();
  ObjectReader root(doc, "");
  std::uint64_t seed = cfg.seed;
  root.read("seed", seed);
  root.read("output_dir", cfg.output_dir);
  root.read("iou_threshold", cfg.training.iou_threshold);

  bool epochs_given = false, iters_given = false, srs_given = false;
  std::size_t sched_epochs = 0, vfst_iters = 0;
  if (const json* j = root.child("scheduler")) parse_scheduler(*j, cfg.training, epochs_given, sched_epochs);
  if (const json* j = root.child("vfst")) parse_vfst(*j, cfg.training.vfst, iters_given, vfst_iters);
  if (const json* j = root.child("loop")) parse_loop(*j, cfg.training.loop, srs_given);
  if (const json* j = root.child("decoder")) parse_decoder(*j, cfg.training.decoder);
  if (const json* j = root.child("ablation")) parse_ablation(*j, cfg.training.ablation);
  if (const json* j = root.child("scenario")) parse_scenario(*j, cfg.scenario);
  root.finish();

  auto& t = cfg.training;
  if (!srs_given) t.loop.srs_epochs = LoopConfig::default_srs_epochs(t.loop.total_epochs);
  t.scheduler.total_epochs = epochs_given ? sched_epochs : t.loop.total_epochs;
  t.vfst.total_iters = iters_given ? vfst_iters : t.loop.total_iters();
  cfg.apply_seed(seed);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json dump_config(const RunConfig& cfg) {
  const auto& t = cfg.training;
  json classes = json::array();
  for (const auto& c : cfg.scenario.classes) {
    classes.push_back({{"id", c.id},
                       {"name", c.name},
                       {"prevalence", c.prevalence},
                       {"mean_start", c.mean_start},
                       {"mean_end", c.mean_end},
                       {"var_start", c.var_start},
                       {"var_end", c.var_end}});
  }
  json levels = json::array();
  for (const auto& [h, w] : cfg.scenario.pyramid.levels) levels.push_back({h, w});
  const auto& g = cfg.scenario.grid;
  const auto& lm = cfg.scenario.learning;
  return {
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"iou_threshold", t.iou_threshold},
      {"scheduler",
       {{"eta_min", t.scheduler.eta_min},
        {"eta_max", t.scheduler.eta_max},
        {"steepness", t.scheduler.steepness},
        {"midpoint", t.scheduler.midpoint},
        {"mu_0", t.scheduler.mu_0},
        {"mu_min", t.scheduler.mu_min},
        {"mu_max", t.scheduler.mu_max},
        {"loss_window", t.scheduler.loss_window},
        {"total_epochs", t.scheduler.total_epochs},
        {"loss_source", to_string(t.scheduler_loss)},
        {"mu_update", to_string(t.mu_cadence)}}},
      {"vfst",
       {{"alpha_dt", t.vfst.alpha_dt},
        {"beta", t.vfst.beta},
        {"min_dt", t.vfst.min_dt},
        {"max_dt", t.vfst.max_dt},
        {"alpha_at", t.vfst.alpha_at},
        {"gamma_mode", to_string(t.vfst.gamma_mode)},
        {"stats_floor", t.vfst.stats_floor},
        {"n_init", t.vfst.n_init},
        {"total_iters", t.vfst.total_iters}}},
      {"loop",
       {{"total_epochs", t.loop.total_epochs},
        {"iters_per_epoch", t.loop.iters_per_epoch},
        {"srs_epochs", t.loop.srs_epochs},
        {"momentum", t.loop.momentum}}},
      {"decoder", {{"hidden_dim", t.decoder.hidden_dim}, {"lr", t.decoder.lr}, {"mask_token", t.decoder.mask_token}}},
      {"ablation",
       {{"fixed_mask_ratio", optional_to_json(t.ablation.fixed_mask_ratio)},
        {"fixed_threshold", optional_to_json(t.ablation.fixed_threshold)},
        {"no_teacher", t.ablation.no_teacher}}},
      {"scenario",
       {{"classes", classes},
        {"correctness_exponent", cfg.scenario.correctness_exponent},
        {"detections_per_iter", cfg.scenario.detections_per_iter},
        {"grid",
         {{"cols", g.cols}, {"rows", g.rows}, {"cell", g.cell}, {"box_fraction", g.box_fraction}, {"jitter", g.jitter}}},
        {"pyramid",
         {{"channels", cfg.scenario.pyramid.channels},
          {"levels", levels},
          {"latent_rank", cfg.scenario.pyramid.latent_rank},
          {"noise", cfg.scenario.pyramid.noise}}},
        {"learning",
         {{"source_representation", lm.source_representation},
          {"skill_rate", lm.skill_rate},
          {"representation_rate", lm.representation_rate},
          {"mask_target_low", lm.mask_target_low},
          {"mask_target_high", lm.mask_target_high},
          {"mask_tolerance", lm.mask_tolerance},
          {"mean_cap", lm.mean_cap}}}}},
  };
}

}  // namespace teachctl
