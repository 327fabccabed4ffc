#include "teachctl/vfst.hpp"

#include <algorithm>
#include <cmath>

#include "teachctl/error.hpp"
#include "teachctl/mask_scheduler.hpp"

namespace teachctl {

namespace {

void require(bool ok, const char* field, const char* constraint) {
  if (!ok) fail(ErrorKind::Config, std::string("vfst.") + field + ": " + constraint);
}

}  // namespace

std::string to_string(GammaMode mode) { return mode == GammaMode::Literal ? "literal" : "described"; }

GammaMode gamma_mode_from_string(const std::string& name) {
  if (name == "literal") return GammaMode::Literal;
  if (name == "described") return GammaMode::Described;
  fail(ErrorKind::Config, "vfst.gamma_mode: expected \"literal\" or \"described\", got \"" + name + "\"");
}

void VfstConfig::validate() const {
  require(std::isfinite(alpha_dt) && alpha_dt >= 0.0, "alpha_dt", "must be >= 0");
  require(std::isfinite(beta) && beta >= 0.0, "beta", "must be >= 0");
  require(std::isfinite(min_dt) && min_dt >= 0.0, "min_dt", "must be >= 0");
  require(std::isfinite(n_init) && n_init >= min_dt, "n_init", "must be >= min_dt");
  require(std::isfinite(max_dt) && max_dt >= n_init, "max_dt", "must be >= n_init");
  require(max_dt <= 1.0, "max_dt", "must be <= 1");
  require(std::isfinite(alpha_at) && alpha_at >= 0.0, "alpha_at", "must be >= 0");
  require(std::isfinite(stats_floor) && stats_floor >= 0.0 && stats_floor <= 1.0, "stats_floor",
          "must be in [0, 1]");
  require(total_iters >= 1, "total_iters", "must be >= 1");
}

double smoothing_coefficient(std::size_t current_iter, std::size_t total_iters, const VfstConfig& cfg) {
  if (total_iters == 0 || current_iter > total_iters) {
    fail(ErrorKind::Domain, "smoothing_coefficient: iteration " + std::to_string(current_iter) +
                                " outside [0, " + std::to_string(total_iters) + "]");
  }
  const double x = static_cast<double>(current_iter) / static_cast<double>(total_iters);
  if (cfg.gamma_mode == GammaMode::Literal) return logistic(cfg.alpha_at * x);
  return logistic(-cfg.alpha_at * (x - 0.5));
}

std::optional<ConfidenceStats> class_stats(std::span<const double> confidences) {
  if (confidences.empty()) return std::nullopt;
  const double n = static_cast<double>(confidences.size());
  double sum = 0.0;
  for (double c : confidences) sum += c;
  const double mean = sum / n;
  double ss = 0.0;
  for (double c : confidences) ss += (c - mean) * (c - mean);
  return ConfidenceStats{mean, ss / n};
}

double threshold_target(double n_old, double mean, double var, double gamma, const VfstConfig& cfg) {
  if (!std::isfinite(n_old) || !(mean >= 0.0 && mean <= 1.0) || !(var >= 0.0) || !std::isfinite(var) ||
      !(gamma >= 0.0 && gamma <= 1.0)) {
    fail(ErrorKind::Input, "update_threshold: need finite n_old, mean in [0,1], var >= 0, gamma in [0,1]");
  }
  return gamma * n_old + (1.0 - gamma) * (cfg.alpha_dt * std::sqrt(mean) - cfg.beta * var);
}

double update_threshold(double n_old, double mean, double var, double gamma, const VfstConfig& cfg) {
  return std::clamp(threshold_target(n_old, mean, var, gamma, cfg), cfg.min_dt, cfg.max_dt);
}

ThresholdMap init_thresholds(std::span<const ClassId> classes, const VfstConfig& cfg) {
  ThresholdMap states;
  for (ClassId id : classes) {
    ClassThresholdState s;
    s.class_id = id;
    s.n = cfg.n_init;
    s.n_old = cfg.n_init;
    states.emplace(id, s);
  }
  return states;
}

ThresholdMap update_all(ThresholdMap states, const ConfidenceBatch& batch, std::size_t current_iter,
                        const VfstConfig& cfg) {
  for (const auto& [id, _] : batch) {
    if (!states.contains(id)) fail(ErrorKind::Input, "update_all: unknown class id " + std::to_string(id));
  }
  const double gamma = smoothing_coefficient(current_iter, cfg.total_iters, cfg);
  std::vector<double> kept;
  for (const auto& [id, confidences] : batch) {
    kept.clear();
    for (double c : confidences) {
      if (!(c >= 0.0 && c <= 1.0)) {
        fail(ErrorKind::Input, "update_all: confidence outside [0, 1] for class " + std::to_string(id));
      }
      if (c >= cfg.stats_floor) kept.push_back(c);
    }
    const auto stats = class_stats(kept);
    if (!stats) continue;
    ClassThresholdState& s = states.at(id);
    const double previous = s.n;
    s.n = update_threshold(previous, stats->mean, stats->var, gamma, cfg);
    s.n_old = previous;
    s.last_mean = stats->mean;
    s.last_var = stats->var;
    s.sample_count += kept.size();
  }
  return states;
}

std::map<ClassId, double> current_thresholds(const ThresholdMap& states) {
  std::map<ClassId, double> out;
  for (const auto& [id, s] : states) out.emplace(id, s.n);
  return out;
}

VfstController::VfstController(VfstConfig cfg, std::span<const ClassId> classes)
    : cfg_(cfg), states_(init_thresholds(classes, cfg)), thresholds_(current_thresholds(states_)) {
  cfg_.validate();
}

VfstController::VfstController(VfstConfig cfg, ThresholdMap states)
    : cfg_(cfg), states_(std::move(states)), thresholds_(current_thresholds(states_)) {
  cfg_.validate();
}

const std::map<ClassId, double>& VfstController::update(const ConfidenceBatch& batch, std::size_t current_iter) {
  states_ = update_all(states_, batch, current_iter, cfg_);
  thresholds_ = current_thresholds(states_);
  return thresholds_;
}

}  // namespace teachctl
