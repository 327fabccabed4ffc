#include <doctest.h>

#include <cmath>

#include "teachctl/error.hpp"
#include "teachctl/run_config.hpp"
#include "teachctl/sim_harness.hpp"
#include "teachctl/teach_loop.hpp"

using namespace teachctl;

namespace {

ParamVector scalar(double v) { return ParamVector{{v}, {}, {}}; }

RunConfig small_config(std::size_t epochs = 4, std::size_t iters = 25) {
  RunConfig cfg = default_run_config();
  cfg.training.loop.total_epochs = epochs;
  cfg.training.loop.iters_per_epoch = iters;
  cfg.training.loop.srs_epochs = LoopConfig::default_srs_epochs(epochs);
  cfg.training.scheduler.total_epochs = epochs;
  cfg.training.vfst.total_iters = epochs * iters;
  return cfg;
}

RunState run(const RunConfig& cfg, std::optional<std::size_t> stop = std::nullopt) {
  SyntheticPredictor p(cfg.scenario);
  RunState s = init_run_state(cfg.training, p);
  run_training(p, cfg.training, s, stop);
  return s;
}

}  // namespace

TEST_CASE("ema_update") {
  auto s = TeacherStudentState::from_source(scalar(1.0), 0.9);
  s.student = scalar(0.0);
  CHECK(ema_update(s).teacher.backbone[0] == doctest::Approx(0.9));

  auto same = TeacherStudentState::from_source(ParamVector{{0.3, -2.0}, {5.0}, {1e-3}}, 0.999);
  CHECK(ema_update(same).teacher == same.teacher);
}

TEST_CASE("ema closed form and contraction") {
  const double m = 0.999, t0 = 2.5, st = -1.0;
  auto s = TeacherStudentState::from_source(ParamVector{{t0, t0}, {t0}, {t0}}, m);
  s.student = ParamVector{{st, st}, {st}, {st}};
  double gap = std::abs(t0 - st);
  for (int n = 1; n <= 10; ++n) {
    s = ema_update(s);
    double expected = t0 * std::pow(m, n) + st * (1 - std::pow(m, n));
    for (double v : s.teacher.backbone) CHECK(std::abs(v - expected) <= 1e-12);
    CHECK(std::abs(s.teacher.other[0] - expected) <= 1e-12);
    double new_gap = std::abs(s.teacher.encoder[0] - st);
    CHECK(std::abs(new_gap - m * gap) <= 1e-12);
    gap = new_gap;
  }
}

TEST_CASE("ema rejects mismatched shapes") {
  auto s = TeacherStudentState::from_source(scalar(1.0), 0.9);
  s.student.other.push_back(1.0);
  CHECK_THROWS_AS(ema_update(s), Error);
}

TEST_CASE("srs_reset") {
  auto s = TeacherStudentState::from_source(ParamVector{{0.1, 0.2}, {0.3}, {0.4}}, 0.999);
  s.student = ParamVector{{9.0, 8.0}, {7.0}, {6.0}};
  s.teacher = ParamVector{{5.0, 4.0}, {3.0}, {2.0}};
  s.epoch = 10;
  auto r = srs_reset(s, {10});
  CHECK(r.student.backbone == s.source.backbone);
  CHECK(r.student.encoder == s.source.encoder);
  CHECK(r.student.other == s.student.other);
  CHECK(r.teacher == s.teacher);
  CHECK(r.source == s.source);
  s.epoch = 9;
  CHECK_THROWS_AS(srs_reset(s, {10}), Error);
}

TEST_CASE("default reset epoch") {
  CHECK(LoopConfig::default_srs_epochs(20) == std::set<std::size_t>{10});
  CHECK(LoopConfig::default_srs_epochs(5) == std::set<std::size_t>{3});
  CHECK(LoopConfig::default_srs_epochs(1) == std::set<std::size_t>{1});
}

TEST_CASE("mode names") {
  CHECK(scheduler_loss_from_string(to_string(SchedulerLoss::Total)) == SchedulerLoss::Total);
  CHECK(mu_cadence_from_string(to_string(MuCadence::PerEpoch)) == MuCadence::PerEpoch);
  CHECK_THROWS_AS(mu_cadence_from_string("hourly"), Error);
}

TEST_CASE("training config validation") {
  auto cfg = small_config();
  CHECK_NOTHROW(cfg.training.validate());
  auto bad = cfg;
  bad.training.scheduler.total_epochs = 7;
  CHECK_THROWS_AS(bad.training.validate(), Error);
  bad = cfg;
  bad.training.vfst.total_iters = 3;
  CHECK_THROWS_AS(bad.training.validate(), Error);
  bad = cfg;
  bad.training.loop.srs_epochs = {9};
  CHECK_THROWS_AS(bad.training.validate(), Error);
}

TEST_CASE("zero iterations leave the state untouched") {
  auto cfg = small_config();
  SyntheticPredictor p(cfg.scenario);
  RunState s = init_run_state(cfg.training, p);
  RunState before = s;
  auto rows = run_training(p, cfg.training, s, 0);
  CHECK(rows.empty());
  CHECK(s == before);
}

TEST_CASE("a run is deterministic and complete") {
  auto cfg = small_config();
  auto a = run(cfg);
  auto b = run(cfg);
  CHECK(a == b);
  CHECK(a.log.size() == 100);
  CHECK(a.iter == 100);
  CHECK(a.scheduler.epoch == 4);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].iter == i);
    CHECK(a.log[i].epoch == i / 25);
    CHECK(a.log[i].mu >= 0.1);
    CHECK(a.log[i].mu <= 0.9);
    CHECK(a.log[i].l_total == doctest::Approx(a.log[i].l_mask + a.log[i].l_teach));
    for (const auto& c : a.log[i].classes) {
      CHECK(c.threshold >= 0.25);
      CHECK(c.threshold <= 0.45);
    }
  }
  auto other_seed = cfg;
  other_seed.apply_seed(cfg.seed + 1);
  CHECK_FALSE(run(other_seed).log == a.log);
}

TEST_CASE("stopping and continuing matches one uninterrupted run") {
  auto cfg = small_config();
  auto whole = run(cfg);
  SyntheticPredictor p(cfg.scenario);
  RunState s = init_run_state(cfg.training, p);
  run_training(p, cfg.training, s, 37);
  CHECK(s.log.size() == 37);
  run_training(p, cfg.training, s);
  CHECK(s == whole);
  CHECK(run_finished(cfg.training, s));
}

TEST_CASE("fixed mask ratio freezes mu") {
  auto cfg = small_config();
  cfg.training.ablation.fixed_mask_ratio = 0.5;
  auto s = run(cfg);
  for (const auto& row : s.log) CHECK(row.mu == 0.5);
}

TEST_CASE("fixed threshold freezes every class") {
  auto cfg = small_config();
  cfg.training.ablation.fixed_threshold = 0.3;
  auto s = run(cfg);
  for (const auto& row : s.log) {
    for (const auto& c : row.classes) CHECK(c.threshold == 0.3);
  }
}

TEST_CASE("no_teacher mirrors the student") {
  auto cfg = small_config();
  cfg.training.ablation.no_teacher = true;
  REQUIRE(cfg.training.frozen_threshold() == 0.5);
  SyntheticPredictor p(cfg.scenario);
  RunState s = init_run_state(cfg.training, p);
  for (std::size_t i = 1; i <= 30; ++i) {
    run_training(p, cfg.training, s, i);
    CHECK(s.models.teacher == s.models.student);
  }
}

TEST_CASE("per-epoch cadence moves mu only at epoch boundaries") {
  auto cfg = small_config();
  cfg.training.mu_cadence = MuCadence::PerEpoch;
  auto s = run(cfg);
  for (std::size_t i = 1; i < s.log.size(); ++i) {
    if (s.log[i].epoch == s.log[i - 1].epoch) CHECK(s.log[i].mu == s.log[i - 1].mu);
  }
}

TEST_CASE("scheduled reset restores the student representation") {
  auto cfg = small_config();
  SyntheticPredictor p(cfg.scenario);
  RunState s = init_run_state(cfg.training, p);
  // Reset epoch 2 is reached after the 50th iteration.
  run_training(p, cfg.training, s, 49);
  CHECK_FALSE(s.models.student.backbone == s.models.source.backbone);
  run_training(p, cfg.training, s, 50);
  CHECK(s.models.student.backbone == s.models.source.backbone);
  CHECK(s.models.student.encoder == s.models.source.encoder);
  CHECK(s.models.student.other != p.source_params().other);
}
