#include "teachctl/state_json.hpp"

#include <string>

#include "teachctl/error.hpp"

namespace teachctl {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorKind::Data, std::string(where) + ": missing field \"" + key + "\"");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key, const char* where) {
  try {
    return field(j, key, where).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string(where) + "." + key + ": " + e.what());
  }
}

}  // namespace

json to_json(const SchedulerConfig& c) {
  return {{"eta_min", c.eta_min},   {"eta_max", c.eta_max}, {"steepness", c.steepness},
          {"midpoint", c.midpoint}, {"mu_0", c.mu_0},       {"mu_min", c.mu_min},
          {"mu_max", c.mu_max},     {"loss_window", c.loss_window}, {"total_epochs", c.total_epochs}};
}

SchedulerConfig scheduler_config_from_json(const json& j) {
  constexpr const char* w = "scheduler config";
  SchedulerConfig c;
  c.eta_min = get<double>(j, "eta_min", w);
  c.eta_max = get<double>(j, "eta_max", w);
  c.steepness = get<double>(j, "steepness", w);
  c.midpoint = get<double>(j, "midpoint", w);
  c.mu_0 = get<double>(j, "mu_0", w);
  c.mu_min = get<double>(j, "mu_min", w);
  c.mu_max = get<double>(j, "mu_max", w);
  c.loss_window = get<std::size_t>(j, "loss_window", w);
  c.total_epochs = get<std::size_t>(j, "total_epochs", w);
  return c;
}

json to_json(const SchedulerState& s) {
  return {{"mu", s.mu},
          {"eta", s.eta},
          {"epoch", s.epoch},
          {"loss_history", std::vector<double>(s.loss_history.begin(), s.loss_history.end())},
          {"update_count", s.update_count}};
}

SchedulerState scheduler_state_from_json(const json& j) {
  constexpr const char* w = "scheduler state";
  SchedulerState s;
  s.mu = get<double>(j, "mu", w);
  s.eta = get<double>(j, "eta", w);
  s.epoch = get<std::size_t>(j, "epoch", w);
  const auto hist = get<std::vector<double>>(j, "loss_history", w);
  s.loss_history.assign(hist.begin(), hist.end());
  s.update_count = get<std::size_t>(j, "update_count", w);
  return s;
}

json to_json(const VfstConfig& c) {
  return {{"alpha_dt", c.alpha_dt}, {"beta", c.beta},
          {"min_dt", c.min_dt},     {"max_dt", c.max_dt},
          {"alpha_at", c.alpha_at}, {"gamma_mode", to_string(c.gamma_mode)},
          {"stats_floor", c.stats_floor}, {"n_init", c.n_init},
          {"total_iters", c.total_iters}};
}

VfstConfig vfst_config_from_json(const json& j) {
  constexpr const char* w = "vfst config";
  VfstConfig c;
  c.alpha_dt = get<double>(j, "alpha_dt", w);
  c.beta = get<double>(j, "beta", w);
  c.min_dt = get<double>(j, "min_dt", w);
  c.max_dt = get<double>(j, "max_dt", w);
  c.alpha_at = get<double>(j, "alpha_at", w);
  c.gamma_mode = gamma_mode_from_string(get<std::string>(j, "gamma_mode", w));
  c.stats_floor = get<double>(j, "stats_floor", w);
  c.n_init = get<double>(j, "n_init", w);
  c.total_iters = get<std::size_t>(j, "total_iters", w);
  return c;
}

json to_json(const ThresholdMap& states) {
  json arr = json::array();
  for (const auto& [id, s] : states) {
    arr.push_back({{"class_id", id},
                   {"n", s.n},
                   {"n_old", s.n_old},
                   {"last_mean", s.last_mean},
                   {"last_var", s.last_var},
                   {"sample_count", s.sample_count}});
  }
  return arr;
}

ThresholdMap threshold_map_from_json(const json& j) {
  constexpr const char* w = "threshold state";
  if (!j.is_array()) fail(ErrorKind::Data, "threshold state: expected an array");
  ThresholdMap out;
  for (const auto& e : j) {
    ClassThresholdState s;
    s.class_id = get<ClassId>(e, "class_id", w);
    s.n = get<double>(e, "n", w);
    s.n_old = get<double>(e, "n_old", w);
    s.last_mean = get<double>(e, "last_mean", w);
    s.last_var = get<double>(e, "last_var", w);
    s.sample_count = get<std::size_t>(e, "sample_count", w);
    out[s.class_id] = s;
  }
  return out;
}

json to_json(const ParamVector& p) {
  return {{"backbone", p.backbone}, {"encoder", p.encoder}, {"other", p.other}};
}

ParamVector param_vector_from_json(const json& j) {
  constexpr const char* w = "parameter vector";
  return {get<std::vector<double>>(j, "backbone", w), get<std::vector<double>>(j, "encoder", w),
          get<std::vector<double>>(j, "other", w)};
}

json to_json(const TeacherStudentState& s) {
  return {{"teacher", to_json(s.teacher)}, {"student", to_json(s.student)}, {"source", to_json(s.source)},
          {"momentum", s.momentum},        {"iter", s.iter},                {"epoch", s.epoch}};
}

TeacherStudentState teacher_student_from_json(const json& j) {
  constexpr const char* w = "teacher-student state";
  TeacherStudentState s;
  s.teacher = param_vector_from_json(field(j, "teacher", w));
  s.student = param_vector_from_json(field(j, "student", w));
  s.source = param_vector_from_json(field(j, "source", w));
  s.momentum = get<double>(j, "momentum", w);
  s.iter = get<std::size_t>(j, "iter", w);
  s.epoch = get<std::size_t>(j, "epoch", w);
  return s;
}

json to_json(const DecoderParams& p) {
  return {{"channels", p.channels}, {"hidden", p.hidden}, {"w1", p.w1},
          {"b1", p.b1},             {"w2", p.w2},         {"b2", p.b2}};
}

DecoderParams decoder_params_from_json(const json& j) {
  constexpr const char* w = "decoder params";
  DecoderParams p;
  p.channels = get<std::size_t>(j, "channels", w);
  p.hidden = get<std::size_t>(j, "hidden", w);
  p.w1 = get<std::vector<double>>(j, "w1", w);
  p.b1 = get<std::vector<double>>(j, "b1", w);
  p.w2 = get<std::vector<double>>(j, "w2", w);
  p.b2 = get<std::vector<double>>(j, "b2", w);
  try {
    p.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Data, std::string("decoder params: ") + e.what());
  }
  return p;
}

json to_json(const FeatureMap& f) {
  return {{"level", f.level}, {"channels", f.channels}, {"height", f.height}, {"width", f.width}, {"values", f.values}};
}

FeatureMap feature_map_from_json(const json& j) {
  constexpr const char* w = "feature map";
  FeatureMap f;
  f.level = get<std::size_t>(j, "level", w);
  f.channels = get<std::size_t>(j, "channels", w);
  f.height = get<std::size_t>(j, "height", w);
  f.width = get<std::size_t>(j, "width", w);
  f.values = get<std::vector<double>>(j, "values", w);
  try {
    f.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Data, std::string("feature map: ") + e.what());
  }
  return f;
}

json to_json(const MetricsRow& r) {
  json classes = json::array();
  for (const auto& c : r.classes) {
    classes.push_back({{"class_id", c.class_id},
                       {"threshold", c.threshold},
                       {"mean", c.mean},
                       {"var", c.var},
                       {"samples", c.samples},
                       {"kept", c.kept},
                       {"tp", c.metrics.tp},
                       {"fp", c.metrics.fp},
                       {"fn", c.metrics.fn}});
  }
  return {{"iter", r.iter},         {"epoch", r.epoch},   {"mu", r.mu},           {"eta", r.eta},
          {"gamma", r.gamma},       {"classes", classes}, {"macro_f1", r.macro_f1}, {"l_mask", r.l_mask},
          {"l_teach", r.l_teach},   {"l_total", r.l_total}};
}

MetricsRow metrics_row_from_json(const json& j) {
  constexpr const char* w = "metrics row";
  MetricsRow r;
  r.iter = get<std::size_t>(j, "iter", w);
  r.epoch = get<std::size_t>(j, "epoch", w);
  r.mu = get<double>(j, "mu", w);
  r.eta = get<double>(j, "eta", w);
  r.gamma = get<double>(j, "gamma", w);
  for (const auto& c : field(j, "classes", w)) {
    ClassRow cr;
    cr.class_id = get<ClassId>(c, "class_id", w);
    cr.threshold = get<double>(c, "threshold", w);
    cr.mean = get<double>(c, "mean", w);
    cr.var = get<double>(c, "var", w);
    cr.samples = get<std::size_t>(c, "samples", w);
    cr.kept = get<std::size_t>(c, "kept", w);
    cr.metrics = metrics_from_counts(get<std::size_t>(c, "tp", w), get<std::size_t>(c, "fp", w),
                                     get<std::size_t>(c, "fn", w));
    r.classes.push_back(cr);
  }
  r.macro_f1 = get<double>(j, "macro_f1", w);
  r.l_mask = get<double>(j, "l_mask", w);
  r.l_teach = get<double>(j, "l_teach", w);
  r.l_total = get<double>(j, "l_total", w);
  return r;
}

json to_json(const RunState& s) {
  json log = json::array();
  for (const auto& row : s.log) log.push_back(to_json(row));
  return {{"scheduler", to_json(s.scheduler)},
          {"thresholds", to_json(s.thresholds)},
          {"models", to_json(s.models)},
          {"decoder", to_json(s.decoder)},
          {"iter", s.iter},
          {"epoch_loss_sum", s.epoch_loss_sum},
          {"epoch_loss_count", s.epoch_loss_count},
          {"log", log}};
}

RunState run_state_from_json(const json& j) {
  constexpr const char* w = "run state";
  RunState s;
  s.scheduler = scheduler_state_from_json(field(j, "scheduler", w));
  s.thresholds = threshold_map_from_json(field(j, "thresholds", w));
  s.models = teacher_student_from_json(field(j, "models", w));
  s.decoder = decoder_params_from_json(field(j, "decoder", w));
  s.iter = get<std::size_t>(j, "iter", w);
  s.epoch_loss_sum = get<double>(j, "epoch_loss_sum", w);
  s.epoch_loss_count = get<std::size_t>(j, "epoch_loss_count", w);
  const json& log = field(j, "log", w);
  if (!log.is_array()) fail(ErrorKind::Data, "run state.log: expected an array");
  for (const auto& row : log) s.log.push_back(metrics_row_from_json(row));
  return s;
}

}  // namespace teachctl
