#pragma once

// Per-class pseudo-label thresholds driven by confidence statistics.
//
//   N = clamp(gamma * N_old + (1 - gamma) * (alpha_dt * sqrt(mean) - beta * var), min_dt, max_dt)
//
// gamma is a logistic function of training progress. In `described` mode it
// falls from ~1 to ~0 so the threshold leans on history early and on the
// current statistics late; `literal` mode evaluates 1 / (1 + exp(-alpha_at * x))
// which rises from 0.5 instead.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teachctl/types.hpp"

namespace teachctl {

enum class GammaMode { Literal, Described };

std::string to_string(GammaMode mode);
GammaMode gamma_mode_from_string(const std::string& name);

struct VfstConfig {
  double alpha_dt = 0.5;
  double beta = 0.2;
  double min_dt = 0.25;
  double max_dt = 0.45;
  double alpha_at = 10.0;
  GammaMode gamma_mode = GammaMode::Described;
  double stats_floor = 0.05;  // confidences below this are ignored by the statistics
  double n_init = 0.3;
  std::size_t total_iters = 1;

  void validate() const;
  bool operator==(const VfstConfig&) const = default;
};

struct ClassThresholdState {
  ClassId class_id = 0;
  double n = 0.0;
  double n_old = 0.0;
  double last_mean = 0.0;
  double last_var = 0.0;
  std::size_t sample_count = 0;  // confidences absorbed so far

  bool operator==(const ClassThresholdState&) const = default;
};

using ThresholdMap = std::map<ClassId, ClassThresholdState>;
using ConfidenceBatch = std::map<ClassId, std::vector<double>>;

double smoothing_coefficient(std::size_t current_iter, std::size_t total_iters, const VfstConfig& cfg);

struct ConfidenceStats {
  double mean = 0.0;
  double var = 0.0;  // population variance
};

// nullopt for an empty list: the class is not updated this round.
std::optional<ConfidenceStats> class_stats(std::span<const double> confidences);

// gamma * N_old + (1 - gamma) * (alpha_dt * sqrt(mean) - beta * var), before clamping.
double threshold_target(double n_old, double mean, double var, double gamma, const VfstConfig& cfg);

double update_threshold(double n_old, double mean, double var, double gamma, const VfstConfig& cfg);

ThresholdMap init_thresholds(std::span<const ClassId> classes, const VfstConfig& cfg);

// One round: gamma from current_iter, then every class present in the batch
// (after dropping confidences below stats_floor) is updated. Classes without
// surviving samples keep their state.
ThresholdMap update_all(ThresholdMap states, const ConfidenceBatch& batch, std::size_t current_iter,
                        const VfstConfig& cfg);

std::map<ClassId, double> current_thresholds(const ThresholdMap& states);

// Owning wrapper for callers that drive the thresholds iteration by iteration.
class VfstController {
 public:
  VfstController(VfstConfig cfg, std::span<const ClassId> classes);
  VfstController(VfstConfig cfg, ThresholdMap states);

  const std::map<ClassId, double>& update(const ConfidenceBatch& batch, std::size_t current_iter);

  const VfstConfig& config() const noexcept { return cfg_; }
  const ThresholdMap& states() const noexcept { return states_; }
  const std::map<ClassId, double>& thresholds() const noexcept { return thresholds_; }

 private:
  VfstConfig cfg_;
  ThresholdMap states_;
  std::map<ClassId, double> thresholds_;
};

}  // namespace teachctl
