#pragma once

// Seeded synthetic self-training scenarios.
//
// Each class has a prevalence weight and a confidence distribution whose
// mean and variance drift linearly over the run. Scores are Beta draws with
// matched moments; a detection is a true positive with probability
// score^rho. True positives sit on a ground-truth box (IoU >= 0.7), false
// positives sit in an empty grid cell. A feature pyramid built from a fixed
// low-rank channel mixing plus noise stands in for backbone features.

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "teachctl/feature_masking.hpp"
#include "teachctl/pseudo_labels.hpp"
#include "teachctl/teach_loop.hpp"

namespace teachctl {

struct ClassScenario {
  ClassId id = 0;
  std::string name;
  double prevalence = 1.0;
  double mean_start = 0.4;
  double mean_end = 0.6;
  double var_start = 0.04;
  double var_end = 0.03;

  bool operator==(const ClassScenario&) const = default;
};

struct BoxGrid {
  std::size_t cols = 8;
  std::size_t rows = 8;
  double cell = 64.0;          // pixels
  double box_fraction = 0.5;   // box side relative to the cell
  double jitter = 0.08;        // max true-positive offset relative to box side

  bool operator==(const BoxGrid&) const = default;
};

struct PyramidSpec {
  std::size_t channels = 16;
  std::vector<std::pair<std::size_t, std::size_t>> levels{{32, 32}, {16, 16}, {8, 8}};
  std::size_t latent_rank = 4;
  double noise = 0.5;

  bool operator==(const PyramidSpec&) const = default;
};

// Response of the synthetic student to training signals.
struct LearningModel {
  double source_representation = 0.2;  // backbone/encoder value of the source weights
  double skill_rate = 0.004;           // per-iteration class skill gain at F1 = 1
  double representation_rate = 0.003;  // per-iteration representation gain at the ideal mask ratio
  double mask_target_low = 0.25;       // ideal mask ratio at representation 0
  double mask_target_high = 0.85;      // ideal mask ratio at representation 1
  double mask_tolerance = 0.15;        // width of the mask-ratio benefit curve
  double mean_cap = 0.9;               // score mean reached at full skill

  bool operator==(const LearningModel&) const = default;
};

struct ScenarioConfig {
  std::vector<ClassScenario> classes;
  double correctness_exponent = 1.0;  // rho
  std::size_t detections_per_iter = 48;
  BoxGrid grid;
  PyramidSpec pyramid;
  LearningModel learning;
  std::uint64_t seed = 0;

  // Three classes with prevalence 10:2:1 and upward-drifting confidences.
  static ScenarioConfig default_imbalanced();
  std::vector<ClassId> class_ids() const;
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

struct DriftedParams {
  double mean = 0.0;
  double var = 0.0;
};

std::map<ClassId, DriftedParams> drifted_params(const ScenarioConfig& cfg, double run_fraction);

struct BetaParams {
  double a = 0.0;
  double b = 0.0;
};

// Throws ErrorKind::Config unless 0 < mean < 1 and 0 < var < mean * (1 - mean).
BetaParams beta_from_moments(double mean, double var);
DriftedParams beta_moments(const BetaParams& p) noexcept;
// var == 0 returns the mean itself.
double sample_beta(double mean, double var, std::mt19937_64& rng);

// Per-class shift of the score mean toward LearningModel::mean_cap, in [0, 1],
// and the multiplier on feature noise.
struct PredictorBias {
  std::map<ClassId, double> skill;
  double feature_noise_scale = 1.0;
};

struct IterationSample {
  std::vector<Detection> detections;
  std::vector<bool> true_positive;
  std::vector<GroundTruthBox> ground_truth;
  std::vector<FeatureMap> pyramid;
};

double run_fraction(std::size_t iter, std::size_t total_iters) noexcept;

// Pure in (cfg, iter, total_iters, bias).
IterationSample generate_iteration(const ScenarioConfig& cfg, std::size_t iter, std::size_t total_iters,
                                   const PredictorBias& bias = {});

// Predictor over a ScenarioConfig. Parameter layout: backbone and encoder hold
// the representation quality (4 entries each), `other` holds one skill value
// per class in class_ids() order.
class SyntheticPredictor final : public Predictor {
 public:
  explicit SyntheticPredictor(ScenarioConfig cfg);

  std::vector<ClassId> classes() const override { return cfg_.class_ids(); }
  ParamVector source_params() const override;
  std::size_t feature_channels() const override { return cfg_.pyramid.channels; }
  TeacherOutput predict(const ParamVector& teacher, const ParamVector& student, std::size_t iter,
                        std::size_t total_iters) override;
  double student_step(ParamVector& student, const StudentFeedback& feedback) override;

  const ScenarioConfig& scenario() const noexcept { return cfg_; }

  static double representation(const ParamVector& p) noexcept;
  // Mask ratio the synthetic student benefits most from at representation r.
  double ideal_mask_ratio(double r) const noexcept;

 private:
  ScenarioConfig cfg_;
  std::vector<double> prevalence_weights_;
};

}  // namespace teachctl
