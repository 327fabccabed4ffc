#include <doctest.h>

#include <sstream>

#include "teachctl/error.hpp"
#include "teachctl/reports.hpp"
#include "teachctl/run_config.hpp"
#include "teachctl/simulate.hpp"
#include "teachctl/state_json.hpp"

using namespace teachctl;
using nlohmann::json;

namespace {

std::string config_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

bool mentions(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

RunConfig small_config() {
  return parse_config(json::parse(R"({"loop": {"total_epochs": 3, "iters_per_epoch": 10}})"));
}

}  // namespace

TEST_CASE("empty document gives the defaults") {
  CHECK(parse_config(json::object()) == default_run_config());
  auto d = default_run_config();
  CHECK(d.seed == 7);
  CHECK(d.training.seed == 7);
  CHECK(d.scenario.seed == 7);
  CHECK(d.training.loop.total_epochs == 20);
  CHECK(d.training.scheduler.total_epochs == 20);
  CHECK(d.training.vfst.total_iters == 4000);
  CHECK(d.training.loop.srs_epochs == std::set<std::size_t>{10});
  CHECK(d.scenario.classes.size() == 3);
}

TEST_CASE("constraint violations name the field") {
  CHECK(mentions(config_error(json::parse(R"({"scheduler": {"eta_min": 0.05}})")), "eta_min"));
  CHECK(mentions(config_error(json::parse(R"({"vfst": {"min_dt": 0.9}})")), "vfst"));
  CHECK(mentions(config_error(json::parse(R"({"ablation": {"fixed_mask_ratio": 1.5}})")), "fixed_mask_ratio"));
}

TEST_CASE("unknown fields and wrong types are rejected") {
  CHECK(mentions(config_error(json::parse(R"({"schedular": {}})")), "schedular"));
  CHECK(mentions(config_error(json::parse(R"({"scheduler": {"eta": 0.1}})")), "scheduler.eta"));
  CHECK(mentions(config_error(json::parse(R"({"seed": "seven"})")), "seed"));
  CHECK(mentions(config_error(json::parse(R"({"loop": {"total_epochs": -3}})")), "total_epochs"));
  CHECK(mentions(config_error(json::parse(R"({"loop": {"total_epochs": 2.5}})")), "total_epochs"));
  CHECK(mentions(config_error(json::parse(R"([1, 2])")), "object"));
}

TEST_CASE("derived totals follow the loop unless given") {
  auto c = small_config();
  CHECK(c.training.scheduler.total_epochs == 3);
  CHECK(c.training.vfst.total_iters == 30);
  CHECK(c.training.loop.srs_epochs == std::set<std::size_t>{2});
  auto mismatch = json::parse(R"({"loop": {"total_epochs": 3}, "scheduler": {"total_epochs": 5}})");
  CHECK_THROWS_AS(parse_config(mismatch), Error);
}

TEST_CASE("seed propagates") {
  auto c = parse_config(json::parse(R"({"seed": 99})"));
  CHECK(c.training.seed == 99);
  CHECK(c.scenario.seed == 99);
}

TEST_CASE("dump and parse round trip") {
  auto doc = json::parse(R"({
    "seed": 5, "output_dir": "elsewhere", "iou_threshold": 0.6,
    "scheduler": {"eta_min": 0.005, "loss_source": "total", "mu_update": "epoch", "mu_0": 0.4},
    "vfst": {"gamma_mode": "literal", "alpha_at": 4.0},
    "loop": {"total_epochs": 6, "iters_per_epoch": 15, "srs_epochs": [2, 5], "momentum": 0.99},
    "decoder": {"hidden_dim": 4, "lr": 0.1, "mask_token": -1.0},
    "ablation": {"fixed_threshold": 0.35},
    "scenario": {"detections_per_iter": 20, "pyramid": {"levels": [[16, 16], [8, 8]]},
                 "classes": [{"id": 4, "name": "van", "prevalence": 2.0}]}
  })");
  auto c = parse_config(doc);
  CHECK(c.training.loop.srs_epochs == std::set<std::size_t>{2, 5});
  CHECK(c.training.scheduler_loss == SchedulerLoss::Total);
  CHECK(c.training.mu_cadence == MuCadence::PerEpoch);
  CHECK(c.training.vfst.gamma_mode == GammaMode::Literal);
  CHECK(c.scenario.classes.size() == 1);
  CHECK(c.scenario.classes[0].name == "van");
  CHECK(c.scenario.pyramid.levels.size() == 2);
  auto dumped = dump_config(c);
  CHECK(parse_config(dumped) == c);
  CHECK(dump_config(parse_config(dumped)) == dumped);
  CHECK(parse_config(dump_config(default_run_config())) == default_run_config());
}

TEST_CASE("state fragments round trip") {
  auto cfg = small_config();
  auto state = run_simulation(cfg);
  CHECK(run_state_from_json(to_json(state)) == state);
  CHECK(scheduler_state_from_json(to_json(state.scheduler)) == state.scheduler);
  CHECK(threshold_map_from_json(to_json(state.thresholds)) == state.thresholds);
  CHECK(decoder_params_from_json(to_json(state.decoder)) == state.decoder);
  CHECK(scheduler_config_from_json(to_json(cfg.training.scheduler)) == cfg.training.scheduler);
  CHECK(vfst_config_from_json(to_json(cfg.training.vfst)) == cfg.training.vfst);
  FeatureMap f(1, 2, 2, 3, 0.25);
  f.values[4] = -7.5;
  CHECK(feature_map_from_json(to_json(f)) == f);
  CHECK_THROWS_AS(scheduler_state_from_json(json::parse(R"({"mu": "x"})")), Error);
  CHECK_THROWS_AS(feature_map_from_json(json::parse(R"({"level": 0, "channels": 1, "height": 2, "width": 2, "values": [1]})")),
                  Error);
}

TEST_CASE("format_number round trips") {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e-7}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(3.0) == "3");
}

TEST_CASE("report layouts") {
  auto cfg = small_config();
  auto state = run_simulation(cfg);
  std::ostringstream m, t, s;
  write_metrics_csv(m, state.log);
  write_thresholds_csv(t, state.log);
  write_schedule_csv(s, state.log, cfg.training.loop.total_epochs);
  auto first_line = [](const std::string& text) { return text.substr(0, text.find('\n')); };
  auto lines = [](const std::string& text) { return std::count(text.begin(), text.end(), '\n'); };
  CHECK(first_line(m.str()) ==
        "iter,epoch,mu,eta,gamma,threshold_1,kept_1,precision_1,recall_1,f1_1,threshold_2,kept_2,precision_2,"
        "recall_2,f1_2,threshold_3,kept_3,precision_3,recall_3,f1_3,macro_f1,l_mask,l_teach,l_total");
  CHECK(first_line(t.str()) == "iter,class_id,mean,var,gamma,N");
  CHECK(first_line(s.str()) == "iter,epoch,x,eta,mu");
  CHECK(lines(m.str()) == 31);
  CHECK(lines(t.str()) == 91);
  CHECK(lines(s.str()) == 31);

  auto summary = summary_json(cfg, state);
  CHECK(summary["iterations"] == 30);
  CHECK(summary["final_epoch"] == 2);
  CHECK(summary["final_thresholds"].size() == 3);
  double f1 = summary["final_epoch_macro_f1"];
  CHECK(f1 == macro_f1(final_epoch_metrics(state.log)));
}

TEST_CASE("final_epoch_metrics sums the last epoch only") {
  MetricsLog log(3);
  log[0].epoch = 0;
  log[1].epoch = 1;
  log[2].epoch = 1;
  log[0].classes = {ClassRow{1, 0.3, 0, 0, 0, 0, metrics_from_counts(50, 0, 0)}};
  log[1].classes = {ClassRow{1, 0.3, 0, 0, 0, 0, metrics_from_counts(1, 1, 0)}};
  log[2].classes = {ClassRow{1, 0.3, 0, 0, 0, 0, metrics_from_counts(2, 0, 1)}};
  auto m = final_epoch_metrics(log).at(1);
  CHECK(m.tp == 3);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(final_epoch_metrics({}).empty());
}
