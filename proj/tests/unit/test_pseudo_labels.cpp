#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "teachctl/error.hpp"
#include "teachctl/pseudo_labels.hpp"

using namespace teachctl;

namespace {

Detection det(double score, ClassId cls = 1, BBox box = {0, 0, 10, 10}, ImageId img = 0) {
  return Detection{img, cls, score, box};
}

GroundTruthBox gt(BBox box, ClassId cls = 1, ImageId img = 0) { return GroundTruthBox{img, cls, box}; }

std::vector<double> scores(const std::vector<Detection>& d) {
  std::vector<double> out;
  for (const auto& x : d) out.push_back(x.score);
  return out;
}

}  // namespace

TEST_CASE("filter keeps scores at or above the class threshold") {
  std::vector<Detection> d{det(0.2), det(0.5), det(0.6), det(0.9)};
  auto r = filter(d, {{1, 0.5}});
  CHECK(scores(r.kept) == std::vector<double>{0.5, 0.6, 0.9});
  CHECK(r.per_class.at(1).kept == 3);
  CHECK(r.per_class.at(1).dropped == 1);
  CHECK(r.per_class.at(1).threshold == 0.5);

  CHECK(filter(d, {{1, 0.0}}).kept.size() == 4);
  std::vector<Detection> low{det(0.1), det(0.3), det(0.44)};
  CHECK(filter(low, {{1, 0.45}}).kept.empty());
}

TEST_CASE("filter is order stable and per class") {
  std::vector<Detection> d{det(0.9, 2), det(0.3, 1), det(0.4, 2), det(0.35, 1), det(0.1, 2)};
  auto mask = keep_mask(d, {{1, 0.32}, {2, 0.4}});
  CHECK(mask == std::vector<bool>{true, false, true, true, false});
  auto r = filter(d, {{1, 0.32}, {2, 0.4}});
  CHECK(scores(r.kept) == std::vector<double>{0.9, 0.4, 0.35});
  CHECK_THROWS_AS(filter(d, {{1, 0.5}}), Error);
}

TEST_CASE("filter never keeps a sub-threshold detection") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Detection> d;
  for (int i = 0; i < 500; ++i) d.push_back(det(u(rng), 1 + i % 3));
  Thresholds t{{1, 0.3}, {2, 0.45}, {3, 0.25}};
  auto r = filter(d, t);
  std::size_t expected = 0;
  for (const auto& x : d) expected += x.score >= t.at(x.class_id);
  CHECK(r.kept.size() == expected);
  for (const auto& x : r.kept) CHECK(x.score >= t.at(x.class_id));
}

TEST_CASE("iou") {
  CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
  CHECK(iou({0, 0, 2, 2}, {5, 5, 2, 2}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {2, 0, 2, 2}) == 0.0);
  CHECK(std::abs(iou({0, 0, 2, 2}, {1, 0, 2, 2}) - 1.0 / 3.0) < 1e-15);
  CHECK(iou({0, 0, 0, 0}, {0, 0, 0, 0}) == 0.0);
}

TEST_CASE("metrics_from_counts") {
  auto m = metrics_from_counts(2, 1, 0);
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == doctest::Approx(0.8));
  auto none = metrics_from_counts(0, 0, 0);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("match_metrics") {
  std::vector<GroundTruthBox> g{gt({0, 0, 10, 10}), gt({50, 50, 10, 10})};
  SUBCASE("exact pseudo-labels") {
    std::vector<Detection> p{det(0.9, 1, {0, 0, 10, 10}), det(0.8, 1, {50, 50, 10, 10})};
    auto m = match_metrics(p, g).at(1);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
  }
  SUBCASE("one extra prediction") {
    std::vector<Detection> p{det(0.9, 1, {1, 0, 10, 10}), det(0.8, 1, {50, 51, 10, 10}), det(0.7, 1, {200, 200, 10, 10})};
    auto m = match_metrics(p, g).at(1);
    CHECK(m.tp == 2);
    CHECK(m.fp == 1);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == 1.0);
  }
  SUBCASE("duplicate of one box counts once") {
    std::vector<Detection> p{det(0.9, 1, {0, 0, 10, 10}), det(0.95, 1, {0, 0, 10, 10})};
    auto m = match_metrics(p, g).at(1);
    CHECK(m.tp == 1);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
  }
  SUBCASE("classes and images never cross") {
    std::vector<Detection> p{det(0.9, 2, {0, 0, 10, 10}), det(0.9, 1, {0, 0, 10, 10}, 4)};
    auto all = match_metrics(p, g);
    CHECK(all.at(1).tp == 0);
    CHECK(all.at(1).fp == 1);
    CHECK(all.at(1).fn == 2);
    CHECK(all.at(2).fp == 1);
  }
  SUBCASE("empty inputs") {
    CHECK(match_metrics({}, {}).empty());
    auto m = match_metrics({}, g).at(1);
    CHECK(m.fn == 2);
    CHECK(m.f1 == 0.0);
  }
  CHECK_THROWS_AS(match_metrics({}, g, 0.0), Error);
}

TEST_CASE("greedy matching agrees with exhaustive assignment") {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> n_boxes(0, 5);
  std::uniform_int_distribution<int> cell(0, 8);
  std::uniform_real_distribution<double> jitter(-4.0, 4.0);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int scene = 0; scene < 300; ++scene) {
    // Ground truth on distinct grid cells, far enough apart that no
    // prediction can overlap two of them at IoU >= 0.5.
    std::vector<int> cells(9);
    for (int i = 0; i < 9; ++i) cells[i] = i;
    std::shuffle(cells.begin(), cells.end(), rng);
    int n_gt = n_boxes(rng), n_pred = n_boxes(rng);
    std::vector<GroundTruthBox> g;
    std::vector<oracle::Box> og;
    for (int i = 0; i < n_gt; ++i) {
      BBox b{(cells[i] % 3) * 40.0, (cells[i] / 3) * 40.0, 16, 16};
      g.push_back(gt(b));
      og.push_back({b.x, b.y, b.w, b.h});
    }
    std::vector<Detection> p;
    std::vector<oracle::Box> op;
    for (int i = 0; i < n_pred; ++i) {
      int c = cell(rng);
      BBox b{(c % 3) * 40.0 + jitter(rng), (c / 3) * 40.0 + jitter(rng), 16, 16};
      p.push_back(det(score(rng), 1, b));
      op.push_back({b.x, b.y, b.w, b.h});
    }
    auto m = match_metrics(p, g);
    std::size_t tp = m.count(1) ? m.at(1).tp : 0;
    CHECK(tp == oracle::max_matching(op, og, 0.5));
  }
}

TEST_CASE("macro_f1") {
  std::map<ClassId, ClassMetrics> m{{1, metrics_from_counts(1, 0, 0)}, {2, metrics_from_counts(0, 1, 1)}};
  CHECK(macro_f1(m) == 0.5);
  CHECK(macro_f1({}) == 0.0);
}
