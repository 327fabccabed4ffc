#include "teachctl/pseudo_labels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "teachctl/error.hpp"

namespace teachctl {

std::vector<bool> keep_mask(std::span<const Detection> dets, const Thresholds& thresholds) {
  std::vector<bool> keep(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto it = thresholds.find(dets[i].class_id);
    if (it == thresholds.end()) {
      fail(ErrorKind::Input, "filter: no threshold for class " + std::to_string(dets[i].class_id));
    }
    keep[i] = dets[i].score >= it->second;
  }
  return keep;
}

FilterReport filter(std::span<const Detection> dets, const Thresholds& thresholds) {
  const auto keep = keep_mask(dets, thresholds);
  FilterReport report;
  for (const auto& [id, n] : thresholds) report.per_class[id].threshold = n;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    auto& counts = report.per_class[dets[i].class_id];
    if (keep[i]) {
      report.kept.push_back(dets[i]);
      ++counts.kept;
    } else {
      ++counts.dropped;
    }
  }
  return report;
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

ClassMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) noexcept {
  ClassMetrics m{tp, fp, fn, 0.0, 0.0, 0.0};
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

std::map<ClassId, ClassMetrics> match_metrics(std::span<const Detection> pseudo,
                                              std::span<const GroundTruthBox> gt, double iou_thr) {
  if (!(iou_thr > 0.0 && iou_thr < 1.0)) fail(ErrorKind::Domain, "match_metrics: iou_thr must be in (0, 1)");

  using Key = std::pair<ImageId, ClassId>;
  std::map<Key, std::vector<std::size_t>> gt_by_key;
  for (std::size_t i = 0; i < gt.size(); ++i) gt_by_key[{gt[i].image_id, gt[i].class_id}].push_back(i);

  std::vector<std::size_t> order(pseudo.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pseudo[a].score > pseudo[b].score; });

  std::map<ClassId, std::size_t> tp, fp, total_gt;
  for (const auto& g : gt) ++total_gt[g.class_id];
  std::vector<bool> gt_used(gt.size(), false);

  for (std::size_t idx : order) {
    const Detection& d = pseudo[idx];
    const auto it = gt_by_key.find({d.image_id, d.class_id});
    std::size_t best = gt.size();
    double best_iou = iou_thr;
    if (it != gt_by_key.end()) {
      for (std::size_t gi : it->second) {
        if (gt_used[gi]) continue;
        const double v = iou(d.bbox, gt[gi].bbox);
        if (v >= best_iou && (best == gt.size() || v > best_iou)) {
          best = gi;
          best_iou = v;
        }
      }
    }
    if (best != gt.size()) {
      gt_used[best] = true;
      ++tp[d.class_id];
    } else {
      ++fp[d.class_id];
    }
  }

  std::map<ClassId, ClassMetrics> out;
  auto classes = total_gt;
  for (const auto& d : pseudo) classes.try_emplace(d.class_id, 0);
  for (const auto& [id, n_gt] : classes) {
    const std::size_t t = tp[id];
    out[id] = metrics_from_counts(t, fp[id], n_gt - t);
  }
  return out;
}

double macro_f1(const std::map<ClassId, ClassMetrics>& per_class) noexcept {
  if (per_class.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, m] : per_class) sum += m.f1;
  return sum / static_cast<double>(per_class.size());
}

}  // namespace teachctl
