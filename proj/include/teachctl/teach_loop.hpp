#pragma once

// Mean-teacher orchestration.
//
// Per iteration: the teacher predicts on the target batch, the class
// thresholds are refreshed from the batch confidences, pseudo-labels are
// filtered and audited, the student takes one pseudo-label step and one
// masked-reconstruction step, the reconstruction loss drives the mask-ratio
// controller, and the teacher follows the student by EMA. Per epoch the
// controller's step size is recomputed and scheduled selective-retraining
// resets restore the student's backbone and encoder from the source weights.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "teachctl/feature_masking.hpp"
#include "teachctl/mask_scheduler.hpp"
#include "teachctl/pseudo_labels.hpp"
#include "teachctl/recon_decoder.hpp"
#include "teachctl/vfst.hpp"

namespace teachctl {

struct ParamVector {
  std::vector<double> backbone;
  std::vector<double> encoder;
  std::vector<double> other;

  bool same_shape(const ParamVector& o) const noexcept {
    return backbone.size() == o.backbone.size() && encoder.size() == o.encoder.size() &&
           other.size() == o.other.size();
  }
  bool operator==(const ParamVector&) const = default;
};

struct TeacherStudentState {
  ParamVector teacher;
  ParamVector student;
  ParamVector source;  // frozen
  double momentum = 0.999;
  std::size_t iter = 0;
  std::size_t epoch = 0;

  static TeacherStudentState from_source(ParamVector source, double momentum);
  bool operator==(const TeacherStudentState&) const = default;
};

// teacher <- m * teacher + (1 - m) * student over all segments.
TeacherStudentState ema_update(TeacherStudentState state);

// Copies source.backbone and source.encoder into the student. Only permitted
// when state.epoch is a scheduled reset epoch.
TeacherStudentState srs_reset(TeacherStudentState state, const std::set<std::size_t>& srs_epochs);

struct LoopConfig {
  std::size_t total_epochs = 20;
  std::size_t iters_per_epoch = 200;
  std::set<std::size_t> srs_epochs;  // subset of [1, total_epochs]
  double momentum = 0.999;

  std::size_t total_iters() const noexcept { return total_epochs * iters_per_epoch; }
  // One reset halfway through the run.
  static std::set<std::size_t> default_srs_epochs(std::size_t total_epochs);
  void validate() const;
  bool operator==(const LoopConfig&) const = default;
};

enum class SchedulerLoss { Mask, Total };
enum class MuCadence { PerIteration, PerEpoch };

std::string to_string(SchedulerLoss v);
std::string to_string(MuCadence v);
SchedulerLoss scheduler_loss_from_string(const std::string& s);
MuCadence mu_cadence_from_string(const std::string& s);

struct DecoderSettings {
  std::size_t hidden_dim = 0;  // 0 selects default_hidden_dim(channels)
  double lr = 0.05;
  double mask_token = 0.0;

  void validate() const;
  bool operator==(const DecoderSettings&) const = default;
};

// Switches that remove one mechanism at a time.
struct AblationModes {
  std::optional<double> fixed_mask_ratio;  // mask-ratio controller frozen
  std::optional<double> fixed_threshold;   // class thresholds frozen
  bool no_teacher = false;                 // teacher mirrors the student, fixed threshold

  void validate() const;
  bool operator==(const AblationModes&) const = default;
};

struct TrainingConfig {
  SchedulerConfig scheduler;
  SchedulerLoss scheduler_loss = SchedulerLoss::Mask;
  MuCadence mu_cadence = MuCadence::PerIteration;
  VfstConfig vfst;
  LoopConfig loop;
  DecoderSettings decoder;
  AblationModes ablation;
  double iou_threshold = 0.5;
  std::uint64_t seed = 0;

  // Threshold applied to every class when thresholds are frozen, if any.
  std::optional<double> frozen_threshold() const;
  void validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

// What the teacher hands to the loop for one iteration.
struct TeacherOutput {
  std::vector<Detection> detections;
  std::vector<GroundTruthBox> ground_truth;  // audit only, never used for training
  std::vector<FeatureMap> pyramid;           // student features of the target batch
};

struct StudentFeedback {
  const std::map<ClassId, ClassMetrics>* pseudo_label_metrics = nullptr;
  std::size_t kept = 0;
  double mask_ratio = 0.0;
  double l_mask = 0.0;
  std::size_t iter = 0;
  std::size_t total_iters = 0;
};

// Detector abstraction. Implementations must be deterministic given their
// construction arguments and the call sequence.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<ClassId> classes() const = 0;
  virtual ParamVector source_params() const = 0;
  // Channel count of the last pyramid level.
  virtual std::size_t feature_channels() const = 0;
  virtual TeacherOutput predict(const ParamVector& teacher, const ParamVector& student, std::size_t iter,
                                std::size_t total_iters) = 0;
  // Updates the student in place and returns the detection loss L_teach.
  virtual double student_step(ParamVector& student, const StudentFeedback& feedback) = 0;
};

struct ClassRow {
  ClassId class_id = 0;
  double threshold = 0.0;
  double mean = 0.0;
  double var = 0.0;
  std::size_t samples = 0;
  std::size_t kept = 0;
  ClassMetrics metrics;

  bool operator==(const ClassRow&) const = default;
};

struct MetricsRow {
  std::size_t iter = 0;
  std::size_t epoch = 0;
  double mu = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  std::vector<ClassRow> classes;
  double macro_f1 = 0.0;
  double l_mask = 0.0;
  double l_teach = 0.0;
  double l_total = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

using MetricsLog = std::vector<MetricsRow>;

struct RunState {
  SchedulerState scheduler;
  ThresholdMap thresholds;
  TeacherStudentState models;
  DecoderParams decoder;
  std::size_t iter = 0;
  double epoch_loss_sum = 0.0;  // used by the per-epoch mask-ratio cadence
  std::size_t epoch_loss_count = 0;
  MetricsLog log;

  bool operator==(const RunState&) const = default;
};

RunState init_run_state(const TrainingConfig& cfg, const Predictor& predictor);

// Runs from state.iter up to `stop_at` (default: the end of the run),
// appending one row per iteration to state.log. Returns the rows produced by
// this call.
MetricsLog run_training(Predictor& predictor, const TrainingConfig& cfg, RunState& state,
                        std::optional<std::size_t> stop_at = std::nullopt);

bool run_finished(const TrainingConfig& cfg, const RunState& state) noexcept;

}  // namespace teachctl
