#include "teachctl/mask_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "teachctl/error.hpp"

namespace teachctl {

namespace {

void require(bool ok, const char* field, const char* constraint) {
  if (!ok) fail(ErrorKind::Config, std::string("scheduler.") + field + ": " + constraint);
}

}  // namespace

void SchedulerConfig::validate() const {
  require(std::isfinite(eta_min) && eta_min >= 0.0, "eta_min", "must be >= 0");
  require(std::isfinite(eta_max) && eta_max >= eta_min, "eta_max", "must be >= eta_min");
  require(std::isfinite(steepness) && steepness > 0.0, "steepness", "must be > 0");
  require(std::isfinite(midpoint), "midpoint", "must be finite");
  require(std::isfinite(mu_min) && mu_min >= 0.0, "mu_min", "must be >= 0");
  require(std::isfinite(mu_0) && mu_0 >= mu_min, "mu_0", "must be >= mu_min");
  require(std::isfinite(mu_max) && mu_max >= mu_0, "mu_max", "must be >= mu_0");
  require(mu_max <= 1.0, "mu_max", "must be <= 1");
  require(loss_window >= 1, "loss_window", "must be >= 1");
  require(total_epochs >= 1, "total_epochs", "must be >= 1");
}

SchedulerState SchedulerState::initial(const SchedulerConfig& cfg) {
  SchedulerState s;
  s.mu = cfg.mu_0;
  s.eta = cfg.eta_max;
  return s;
}

double logistic(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

double step_size(double x, const SchedulerConfig& cfg) {
  if (!(x >= 0.0 && x <= 1.0)) {
    fail(ErrorKind::Domain, "step_size: epoch fraction " + std::to_string(x) + " outside [0, 1]");
  }
  const double sigma = logistic(cfg.steepness * (x - cfg.midpoint));
  return cfg.eta_min + (cfg.eta_max - cfg.eta_min) * (1.0 - sigma);
}

double loss_baseline(const SchedulerConfig& cfg, const SchedulerState& state, double l_current) {
  if (!std::isfinite(l_current) || l_current < 0.0) {
    fail(ErrorKind::Input, "loss must be finite and >= 0, got " + std::to_string(l_current));
  }
  if (state.loss_history.size() < cfg.loss_window) return l_current;
  double sum = 0.0;
  for (auto it = state.loss_history.end() - static_cast<std::ptrdiff_t>(cfg.loss_window);
       it != state.loss_history.end(); ++it) {
    sum += *it;
  }
  return sum / static_cast<double>(cfg.loss_window);
}

SchedulerState update_mask_ratio(const SchedulerConfig& cfg, SchedulerState state, double l_current) {
  const double l_mean = loss_baseline(cfg, state, l_current);
  // Ties go to the decrease branch.
  state.mu = l_current >= l_mean ? state.mu - state.eta : state.mu + state.eta;
  state.mu = std::clamp(state.mu, cfg.mu_min, cfg.mu_max);
  state.loss_history.push_back(l_current);
  while (state.loss_history.size() > cfg.loss_window) state.loss_history.pop_front();
  ++state.update_count;
  return state;
}

SchedulerState advance_epoch(const SchedulerConfig& cfg, SchedulerState state) {
  if (state.epoch >= cfg.total_epochs) {
    fail(ErrorKind::State, "advance_epoch: already at final epoch " + std::to_string(state.epoch));
  }
  ++state.epoch;
  state.eta = step_size(static_cast<double>(state.epoch) / static_cast<double>(cfg.total_epochs), cfg);
  return state;
}

MaskScheduler::MaskScheduler(SchedulerConfig cfg) : cfg_(cfg), state_(SchedulerState::initial(cfg)) {
  cfg_.validate();
}

MaskScheduler::MaskScheduler(SchedulerConfig cfg, SchedulerState state)
    : cfg_(cfg), state_(std::move(state)) {
  cfg_.validate();
}

double MaskScheduler::update(double l_current) {
  state_ = update_mask_ratio(cfg_, state_, l_current);
  return state_.mu;
}

void MaskScheduler::advance_epoch() { state_ = teachctl::advance_epoch(cfg_, state_); }

}  // namespace teachctl
