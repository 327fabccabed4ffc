#pragma once

// Loss-feedback mask-ratio controller with a sigmoid-decaying step size.
//
// The step size eta shrinks from eta_max toward eta_min along a logistic
// curve over the run. Each update compares the current loss against the
// mean of the recent loss window: a loss at or above the baseline lowers the
// mask ratio by eta, a loss below it raises the ratio by eta. The ratio is
// clamped to [mu_min, mu_max].

#include <cstddef>
#include <deque>

namespace teachctl {

struct SchedulerConfig {
  double eta_min = 0.01;
  double eta_max = 0.02;
  double steepness = 10.0;  // k
  double midpoint = 0.5;
  double mu_0 = 0.5;
  double mu_min = 0.1;
  double mu_max = 0.9;
  std::size_t loss_window = 3;
  std::size_t total_epochs = 100;

  // Throws ErrorKind::Config naming the violated constraint.
  void validate() const;

  bool operator==(const SchedulerConfig&) const = default;
};

struct SchedulerState {
  double mu = 0.5;
  double eta = 0.02;
  std::size_t epoch = 0;
  std::deque<double> loss_history;  // oldest first, at most loss_window entries
  std::size_t update_count = 0;

  // mu <- mu_0, eta <- eta_max, empty history.
  static SchedulerState initial(const SchedulerConfig& cfg);

  bool operator==(const SchedulerState&) const = default;
};

double logistic(double z) noexcept;

// eta_min + (eta_max - eta_min) * (1 - logistic(k * (x - midpoint))), x in [0, 1].
double step_size(double x, const SchedulerConfig& cfg);

// Mean of the newest loss_window history entries, or l_current while the
// history is still shorter than the window.
double loss_baseline(const SchedulerConfig& cfg, const SchedulerState& state, double l_current);

SchedulerState update_mask_ratio(const SchedulerConfig& cfg, SchedulerState state, double l_current);

// Moves to the next epoch and recomputes eta at x = epoch / total_epochs.
SchedulerState advance_epoch(const SchedulerConfig& cfg, SchedulerState state);

// Owning wrapper for callers that drive the controller step by step.
class MaskScheduler {
 public:
  explicit MaskScheduler(SchedulerConfig cfg);
  MaskScheduler(SchedulerConfig cfg, SchedulerState state);

  double update(double l_current);
  void advance_epoch();

  double mask_ratio() const noexcept { return state_.mu; }
  double step() const noexcept { return state_.eta; }
  const SchedulerConfig& config() const noexcept { return cfg_; }
  const SchedulerState& state() const noexcept { return state_; }

 private:
  SchedulerConfig cfg_;
  SchedulerState state_;
};

}  // namespace teachctl
