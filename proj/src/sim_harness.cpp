#include "teachctl/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>
#include <string>

#include "teachctl/error.hpp"

namespace teachctl {

namespace {

constexpr std::uint32_t kDetectionStream = 0x64657473u;
constexpr std::uint32_t kFeatureStream = 0x66656174u;
constexpr std::uint32_t kMixingStream = 0x6d697869u;
constexpr std::size_t kRepresentationSize = 4;

std::mt19937_64 stream_engine(std::uint64_t seed, std::uint32_t stream, std::uint64_t iter) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                    static_cast<std::uint32_t>(iter), static_cast<std::uint32_t>(iter >> 32)};
  return std::mt19937_64(seq);
}

void require(bool ok, const std::string& field, const std::string& constraint) {
  if (!ok) fail(ErrorKind::Config, "scenario." + field + ": " + constraint);
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

// Channel mixing matrix (channels x rank), fixed for the whole run.
std::vector<double> mixing_matrix(const ScenarioConfig& cfg) {
  auto rng = stream_engine(cfg.seed, kMixingStream, 0);
  std::normal_distribution<double> n01;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.pyramid.latent_rank));
  std::vector<double> a(cfg.pyramid.channels * cfg.pyramid.latent_rank);
  for (auto& v : a) v = n01(rng) * scale;
  return a;
}

}  // namespace

ScenarioConfig ScenarioConfig::default_imbalanced() {
  ScenarioConfig cfg;
  cfg.classes = {
      {1, "car", 10.0, 0.45, 0.55, 0.04, 0.03},
      {2, "truck", 2.0, 0.35, 0.45, 0.05, 0.04},
      {3, "bus", 1.0, 0.30, 0.40, 0.05, 0.04},
  };
  return cfg;
}

std::vector<ClassId> ScenarioConfig::class_ids() const {
  std::vector<ClassId> ids;
  ids.reserve(classes.size());
  for (const auto& c : classes) ids.push_back(c.id);
  return ids;
}

void ScenarioConfig::validate() const {
  require(!classes.empty(), "classes", "must not be empty");
  std::set<ClassId> seen;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    const std::string f = "classes[" + std::to_string(i) + "]";
    require(seen.insert(c.id).second, f + ".id", "duplicate class id " + std::to_string(c.id));
    require(std::isfinite(c.prevalence) && c.prevalence > 0.0, f + ".prevalence", "must be > 0");
    for (auto [m, v, tag] : {std::tuple{c.mean_start, c.var_start, "start"}, std::tuple{c.mean_end, c.var_end, "end"}}) {
      require(m > 0.0 && m < 1.0, f + ".mean_" + tag, "must be in (0, 1)");
      require(v >= 0.0 && v < m * (1.0 - m), f + ".var_" + tag,
              "must be >= 0 and < mean * (1 - mean) for a Beta distribution");
    }
  }
  require(std::isfinite(correctness_exponent) && correctness_exponent >= 0.0, "correctness_exponent", "must be >= 0");
  require(detections_per_iter >= 1, "detections_per_iter", "must be >= 1");
  require(grid.cols >= 1 && grid.rows >= 1, "grid", "needs at least one cell");
  require(detections_per_iter <= grid.cols * grid.rows, "detections_per_iter", "must not exceed grid cells");
  require(grid.cell > 0.0, "grid.cell", "must be > 0");
  require(grid.box_fraction > 0.0 && grid.box_fraction <= 1.0, "grid.box_fraction", "must be in (0, 1]");
  // Offsets up to 0.08 of the box side in both axes keep IoU above 0.7.
  require(grid.jitter >= 0.0 && grid.jitter <= 0.08, "grid.jitter", "must be in [0, 0.08]");
  require(pyramid.channels >= 1, "pyramid.channels", "must be >= 1");
  require(!pyramid.levels.empty(), "pyramid.levels", "must not be empty");
  for (const auto& [h, w] : pyramid.levels) require(h >= 1 && w >= 1, "pyramid.levels", "sizes must be >= 1");
  require(pyramid.latent_rank >= 1, "pyramid.latent_rank", "must be >= 1");
  require(std::isfinite(pyramid.noise) && pyramid.noise >= 0.0, "pyramid.noise", "must be >= 0");
  const auto& l = learning;
  require(l.source_representation >= 0.0 && l.source_representation <= 1.0, "learning.source_representation",
          "must be in [0, 1]");
  require(l.skill_rate >= 0.0 && l.skill_rate <= 1.0, "learning.skill_rate", "must be in [0, 1]");
  require(l.representation_rate >= 0.0 && l.representation_rate <= 1.0, "learning.representation_rate",
          "must be in [0, 1]");
  require(l.mask_target_low >= 0.0 && l.mask_target_high <= 1.0 && l.mask_target_low <= l.mask_target_high,
          "learning.mask_target", "needs 0 <= low <= high <= 1");
  require(l.mask_tolerance > 0.0, "learning.mask_tolerance", "must be > 0");
  require(l.mean_cap > 0.0 && l.mean_cap < 1.0, "learning.mean_cap", "must be in (0, 1)");
}

std::map<ClassId, DriftedParams> drifted_params(const ScenarioConfig& cfg, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    fail(ErrorKind::Domain, "drifted_params: run fraction outside [0, 1]");
  }
  std::map<ClassId, DriftedParams> out;
  for (const auto& c : cfg.classes) {
    out[c.id] = {lerp(c.mean_start, c.mean_end, fraction), lerp(c.var_start, c.var_end, fraction)};
  }
  return out;
}

BetaParams beta_from_moments(double mean, double var) {
  if (!(mean > 0.0 && mean < 1.0) || !(var > 0.0 && var < mean * (1.0 - mean))) {
    fail(ErrorKind::Config, "infeasible Beta moments: mean " + std::to_string(mean) + ", var " +
                                std::to_string(var) + " (need var < mean * (1 - mean))");
  }
  const double common = mean * (1.0 - mean) / var - 1.0;
  return {mean * common, (1.0 - mean) * common};
}

DriftedParams beta_moments(const BetaParams& p) noexcept {
  const double s = p.a + p.b;
  return {p.a / s, p.a * p.b / (s * s * (s + 1.0))};
}

double sample_beta(double mean, double var, std::mt19937_64& rng) {
  if (var == 0.0) return mean;
  const BetaParams p = beta_from_moments(mean, var);
  std::gamma_distribution<double> ga(p.a, 1.0);
  std::gamma_distribution<double> gb(p.b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y <= 0.0) return mean;
  return std::clamp(x / (x + y), 0.0, 1.0);
}

double run_fraction(std::size_t iter, std::size_t total_iters) noexcept {
  if (total_iters <= 1) return 0.0;
  return std::min(1.0, static_cast<double>(iter) / static_cast<double>(total_iters - 1));
}

IterationSample generate_iteration(const ScenarioConfig& cfg, std::size_t iter, std::size_t total_iters,
                                   const PredictorBias& bias) {
  IterationSample out;
  const auto drift = drifted_params(cfg, run_fraction(iter, total_iters));
  std::vector<double> weights;
  for (const auto& c : cfg.classes) weights.push_back(c.prevalence);

  auto rng = stream_engine(cfg.seed, kDetectionStream, iter);
  const double side = cfg.grid.cell * cfg.grid.box_fraction;
  const double margin = (cfg.grid.cell - side) / 2.0;
  const auto image = static_cast<ImageId>(iter);

  for (std::size_t i = 0; i < cfg.detections_per_iter; ++i) {
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const ClassScenario& cls = cfg.classes[pick(rng)];
    const DriftedParams& p = drift.at(cls.id);
    const auto sk = bias.skill.find(cls.id);
    const double skill = sk == bias.skill.end() ? 0.0 : std::clamp(sk->second, 0.0, 1.0);
    const double mean = p.mean + (cfg.learning.mean_cap - p.mean) * skill;
    // Shifting the mean can make the configured variance infeasible; cap it.
    const double var = std::min(p.var, 0.95 * mean * (1.0 - mean));
    const double score = sample_beta(mean, var, rng);
    std::bernoulli_distribution correct(std::pow(score, cfg.correctness_exponent));
    const bool tp = correct(rng);

    const double cx = static_cast<double>(i % cfg.grid.cols) * cfg.grid.cell;
    const double cy = static_cast<double>(i / cfg.grid.cols) * cfg.grid.cell;
    const BBox gt{cx + margin, cy + margin, side, side};
    std::uniform_real_distribution<double> offset(-cfg.grid.jitter * side, cfg.grid.jitter * side);
    const double dx = offset(rng);
    const double dy = offset(rng);
    out.detections.push_back({image, cls.id, score, {gt.x + dx, gt.y + dy, side, side}});
    out.true_positive.push_back(tp);
    if (tp) out.ground_truth.push_back({image, cls.id, gt});
  }

  const auto mixing = mixing_matrix(cfg);
  const std::size_t rank = cfg.pyramid.latent_rank;
  const double noise = cfg.pyramid.noise * bias.feature_noise_scale;
  auto frng = stream_engine(cfg.seed, kFeatureStream, iter);
  std::normal_distribution<double> n01;
  std::vector<double> z(rank);
  for (std::size_t level = 0; level < cfg.pyramid.levels.size(); ++level) {
    const auto [h, w] = cfg.pyramid.levels[level];
    FeatureMap f(level, cfg.pyramid.channels, h, w);
    for (std::size_t pos = 0; pos < h * w; ++pos) {
      for (auto& v : z) v = n01(frng);
      for (std::size_t c = 0; c < f.channels; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < rank; ++k) s += mixing[c * rank + k] * z[k];
        f.values[c * h * w + pos] = s + noise * n01(frng);
      }
    }
    out.pyramid.push_back(std::move(f));
  }
  return out;
}

SyntheticPredictor::SyntheticPredictor(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const double total = std::accumulate(cfg_.classes.begin(), cfg_.classes.end(), 0.0,
                                       [](double s, const ClassScenario& c) { return s + c.prevalence; });
  for (const auto& c : cfg_.classes) prevalence_weights_.push_back(c.prevalence / total);
}

ParamVector SyntheticPredictor::source_params() const {
  ParamVector p;
  p.backbone.assign(kRepresentationSize, cfg_.learning.source_representation);
  p.encoder.assign(kRepresentationSize, cfg_.learning.source_representation);
  p.other.assign(cfg_.classes.size(), 0.0);
  return p;
}

double SyntheticPredictor::representation(const ParamVector& p) noexcept {
  const std::size_t n = p.backbone.size() + p.encoder.size();
  if (n == 0) return 0.0;
  double s = 0.0;
  for (double v : p.backbone) s += v;
  for (double v : p.encoder) s += v;
  return std::clamp(s / static_cast<double>(n), 0.0, 1.0);
}

double SyntheticPredictor::ideal_mask_ratio(double r) const noexcept {
  return cfg_.learning.mask_target_low + (cfg_.learning.mask_target_high - cfg_.learning.mask_target_low) * r;
}

TeacherOutput SyntheticPredictor::predict(const ParamVector& teacher, const ParamVector& student, std::size_t iter,
                                          std::size_t total_iters) {
  if (teacher.other.size() != cfg_.classes.size()) {
    fail(ErrorKind::State, "teacher parameters do not match the scenario's class count");
  }
  PredictorBias bias;
  for (std::size_t i = 0; i < cfg_.classes.size(); ++i) bias.skill[cfg_.classes[i].id] = teacher.other[i];
  bias.feature_noise_scale = 1.0 - representation(student);
  auto sample = generate_iteration(cfg_, iter, total_iters, bias);
  return {std::move(sample.detections), std::move(sample.ground_truth), std::move(sample.pyramid)};
}

double SyntheticPredictor::student_step(ParamVector& student, const StudentFeedback& feedback) {
  if (student.other.size() != cfg_.classes.size()) {
    fail(ErrorKind::State, "student parameters do not match the scenario's class count");
  }
  const auto& l = cfg_.learning;
  const double r = representation(student);
  const double miss = (feedback.mask_ratio - ideal_mask_ratio(r)) / l.mask_tolerance;
  const double benefit = std::exp(-0.5 * miss * miss);
  for (auto* seg : {&student.backbone, &student.encoder}) {
    for (auto& v : *seg) v += l.representation_rate * benefit * (1.0 - v);
  }

  double l_teach = 0.0;
  for (std::size_t i = 0; i < cfg_.classes.size(); ++i) {
    double f1 = 0.0;
    if (feedback.pseudo_label_metrics) {
      const auto it = feedback.pseudo_label_metrics->find(cfg_.classes[i].id);
      if (it != feedback.pseudo_label_metrics->end()) f1 = it->second.f1;
    }
    double& skill = student.other[i];
    skill += l.skill_rate * f1 * (0.5 + 0.5 * r) * (1.0 - skill);
    l_teach += prevalence_weights_[i] * (1.0 - f1);
  }
  return l_teach;
}

}  // namespace teachctl
