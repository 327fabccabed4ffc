#include "teachctl/teach_loop.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "teachctl/error.hpp"

namespace teachctl {

namespace {

void ema_segment(std::vector<double>& teacher, const std::vector<double>& student, double m) {
  for (std::size_t i = 0; i < teacher.size(); ++i) teacher[i] = m * teacher[i] + (1.0 - m) * student[i];
}

void require(bool ok, const std::string& field, const char* constraint) {
  if (!ok) fail(ErrorKind::Config, field + ": " + constraint);
}

bool is_ratio(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

TeacherStudentState TeacherStudentState::from_source(ParamVector source, double momentum) {
  TeacherStudentState s;
  s.teacher = source;
  s.student = source;
  s.source = std::move(source);
  s.momentum = momentum;
  return s;
}

TeacherStudentState ema_update(TeacherStudentState state) {
  if (!state.teacher.same_shape(state.student)) {
    fail(ErrorKind::State, "ema_update: teacher and student segment shapes differ");
  }
  const double m = state.momentum;
  ema_segment(state.teacher.backbone, state.student.backbone, m);
  ema_segment(state.teacher.encoder, state.student.encoder, m);
  ema_segment(state.teacher.other, state.student.other, m);
  return state;
}

TeacherStudentState srs_reset(TeacherStudentState state, const std::set<std::size_t>& srs_epochs) {
  if (!srs_epochs.contains(state.epoch)) {
    fail(ErrorKind::State, "srs_reset: epoch " + std::to_string(state.epoch) + " is not a scheduled reset epoch");
  }
  if (!state.source.same_shape(state.student)) {
    fail(ErrorKind::State, "srs_reset: source and student segment shapes differ");
  }
  state.student.backbone = state.source.backbone;
  state.student.encoder = state.source.encoder;
  return state;
}

std::set<std::size_t> LoopConfig::default_srs_epochs(std::size_t total_epochs) {
  if (total_epochs == 0) return {};
  return {(total_epochs + 1) / 2};
}

void LoopConfig::validate() const {
  require(total_epochs >= 1, "loop.total_epochs", "must be >= 1");
  require(iters_per_epoch >= 1, "loop.iters_per_epoch", "must be >= 1");
  require(momentum > 0.0 && momentum < 1.0, "loop.momentum", "must be in (0, 1)");
  for (std::size_t e : srs_epochs) {
    require(e >= 1 && e <= total_epochs, "loop.srs_epochs", "entries must lie in [1, total_epochs]");
  }
}

std::string to_string(SchedulerLoss v) { return v == SchedulerLoss::Mask ? "mask" : "total"; }
std::string to_string(MuCadence v) { return v == MuCadence::PerIteration ? "iteration" : "epoch"; }

SchedulerLoss scheduler_loss_from_string(const std::string& s) {
  if (s == "mask") return SchedulerLoss::Mask;
  if (s == "total") return SchedulerLoss::Total;
  fail(ErrorKind::Config, "scheduler.loss_source: expected \"mask\" or \"total\", got \"" + s + "\"");
}

MuCadence mu_cadence_from_string(const std::string& s) {
  if (s == "iteration") return MuCadence::PerIteration;
  if (s == "epoch") return MuCadence::PerEpoch;
  fail(ErrorKind::Config, "scheduler.mu_update: expected \"iteration\" or \"epoch\", got \"" + s + "\"");
}

void DecoderSettings::validate() const {
  require(std::isfinite(lr) && lr > 0.0, "decoder.lr", "must be > 0");
  require(std::isfinite(mask_token), "decoder.mask_token", "must be finite");
}

void AblationModes::validate() const {
  if (fixed_mask_ratio) require(is_ratio(*fixed_mask_ratio), "ablation.fixed_mask_ratio", "must be in [0, 1]");
  if (fixed_threshold) require(is_ratio(*fixed_threshold), "ablation.fixed_threshold", "must be in [0, 1]");
}

std::optional<double> TrainingConfig::frozen_threshold() const {
  if (ablation.fixed_threshold) return ablation.fixed_threshold;
  if (ablation.no_teacher) return 0.5;
  return std::nullopt;
}

void TrainingConfig::validate() const {
  scheduler.validate();
  vfst.validate();
  loop.validate();
  decoder.validate();
  ablation.validate();
  require(scheduler.total_epochs == loop.total_epochs, "scheduler.total_epochs",
          "must equal loop.total_epochs");
  require(vfst.total_iters == loop.total_iters(), "vfst.total_iters",
          "must equal loop.total_epochs * loop.iters_per_epoch");
  require(iou_threshold > 0.0 && iou_threshold < 1.0, "iou_threshold", "must be in (0, 1)");
}

RunState init_run_state(const TrainingConfig& cfg, const Predictor& predictor) {
  cfg.validate();
  RunState s;
  s.scheduler = SchedulerState::initial(cfg.scheduler);
  if (cfg.ablation.fixed_mask_ratio) s.scheduler.mu = *cfg.ablation.fixed_mask_ratio;
  const auto classes = predictor.classes();
  s.thresholds = init_thresholds(classes, cfg.vfst);
  if (const auto frozen = cfg.frozen_threshold()) {
    for (auto& [_, t] : s.thresholds) t.n = t.n_old = *frozen;
  }
  s.models = TeacherStudentState::from_source(predictor.source_params(), cfg.loop.momentum);
  const std::size_t channels = predictor.feature_channels();
  const std::size_t hidden = cfg.decoder.hidden_dim ? cfg.decoder.hidden_dim : default_hidden_dim(channels);
  s.decoder = DecoderParams::init_uniform(channels, hidden, cfg.seed ^ 0x5deece66dULL);
  return s;
}

bool run_finished(const TrainingConfig& cfg, const RunState& state) noexcept {
  return state.iter >= cfg.loop.total_iters();
}

MetricsLog run_training(Predictor& predictor, const TrainingConfig& cfg, RunState& state,
                        std::optional<std::size_t> stop_at) {
  const std::size_t total = cfg.loop.total_iters();
  const std::size_t end = std::min(stop_at.value_or(total), total);
  const auto frozen = cfg.frozen_threshold();
  MetricsLog produced;

  while (state.iter < end) {
    const std::size_t t = state.iter;
    MetricsRow row;
    row.iter = t;
    row.epoch = state.models.epoch;

    // 1. teacher predictions
    TeacherOutput out;
    try {
      out = predictor.predict(state.models.teacher, state.models.student, t, total);
    } catch (const Error& e) {
      throw Error(e.kind(), "predictor failed at iteration " + std::to_string(t) + ": " + e.what());
    } catch (const std::exception& e) {
      fail(ErrorKind::State, "predictor failed at iteration " + std::to_string(t) + ": " + e.what());
    }
    if (out.pyramid.empty()) fail(ErrorKind::State, "predictor returned no feature maps");

    // 2. thresholds
    ConfidenceBatch batch;
    for (const auto& d : out.detections) batch[d.class_id].push_back(d.score);
    row.gamma = smoothing_coefficient(t, total, cfg.vfst);
    if (!frozen) state.thresholds = update_all(std::move(state.thresholds), batch, t, cfg.vfst);
    const Thresholds thresholds = current_thresholds(state.thresholds);

    // 3. pseudo-label filtering and audit
    const FilterReport report = filter(out.detections, thresholds);
    auto metrics = match_metrics(report.kept, out.ground_truth, cfg.iou_threshold);
    for (const auto& [id, _] : state.thresholds) metrics.try_emplace(id);

    // 4. masked reconstruction on the last level, then the student step
    const double mu = cfg.ablation.fixed_mask_ratio.value_or(state.scheduler.mu);
    const auto plans = generate_pyramid_masks(out.pyramid, mu, cfg.seed, t);
    std::vector<FeatureMap> masked;
    masked.reserve(out.pyramid.size());
    for (std::size_t i = 0; i < out.pyramid.size(); ++i) {
      masked.push_back(apply_mask(out.pyramid[i], plans[i], cfg.decoder.mask_token));
    }
    const auto lg = loss_and_grad(state.decoder, masked.back(), out.pyramid.back());
    state.decoder = sgd_step(std::move(state.decoder), lg.grads, cfg.decoder.lr);

    StudentFeedback feedback;
    feedback.pseudo_label_metrics = &metrics;
    feedback.kept = report.kept.size();
    feedback.mask_ratio = mu;
    feedback.l_mask = lg.loss;
    feedback.iter = t;
    feedback.total_iters = total;
    const double l_teach = predictor.student_step(state.models.student, feedback);
    const LossPair losses = total_loss(lg.loss, l_teach);

    // 5. mask-ratio feedback
    row.mu = mu;
    row.eta = state.scheduler.eta;
    const double fed = cfg.scheduler_loss == SchedulerLoss::Mask ? losses.l_mask : losses.total;
    if (!cfg.ablation.fixed_mask_ratio) {
      if (cfg.mu_cadence == MuCadence::PerIteration) {
        state.scheduler = update_mask_ratio(cfg.scheduler, std::move(state.scheduler), fed);
      } else {
        state.epoch_loss_sum += fed;
        ++state.epoch_loss_count;
      }
    }

    // 6. teacher update
    if (cfg.ablation.no_teacher) {
      state.models.teacher = state.models.student;
    } else {
      state.models = ema_update(std::move(state.models));
    }
    ++state.models.iter;

    for (const auto& [id, ts] : state.thresholds) {
      ClassRow cr;
      cr.class_id = id;
      cr.threshold = ts.n;
      const auto it = batch.find(id);
      if (frozen) {
        std::vector<double> kept;
        if (it != batch.end()) {
          for (double c : it->second) {
            if (c >= cfg.vfst.stats_floor) kept.push_back(c);
          }
        }
        const auto stats = class_stats(kept);
        cr.mean = stats ? stats->mean : 0.0;
        cr.var = stats ? stats->var : 0.0;
        cr.samples = kept.size();
      } else {
        cr.mean = ts.last_mean;
        cr.var = ts.last_var;
        cr.samples = it == batch.end() ? 0 : it->second.size();
      }
      const auto rc = report.per_class.find(id);
      cr.kept = rc == report.per_class.end() ? 0 : rc->second.kept;
      cr.metrics = metrics.at(id);
      row.classes.push_back(cr);
    }
    row.macro_f1 = macro_f1(metrics);
    row.l_mask = losses.l_mask;
    row.l_teach = losses.l_teach;
    row.l_total = losses.total;

    ++state.iter;

    // Epoch boundary.
    if (state.iter % cfg.loop.iters_per_epoch == 0) {
      if (!cfg.ablation.fixed_mask_ratio && cfg.mu_cadence == MuCadence::PerEpoch && state.epoch_loss_count > 0) {
        const double mean_loss = state.epoch_loss_sum / static_cast<double>(state.epoch_loss_count);
        state.scheduler = update_mask_ratio(cfg.scheduler, std::move(state.scheduler), mean_loss);
        state.epoch_loss_sum = 0.0;
        state.epoch_loss_count = 0;
      }
      state.scheduler = advance_epoch(cfg.scheduler, std::move(state.scheduler));
      ++state.models.epoch;
      if (cfg.loop.srs_epochs.contains(state.models.epoch)) {
        state.models = srs_reset(std::move(state.models), cfg.loop.srs_epochs);
      }
    }

    state.log.push_back(row);
    produced.push_back(std::move(row));
  }
  return produced;
}

}  // namespace teachctl
