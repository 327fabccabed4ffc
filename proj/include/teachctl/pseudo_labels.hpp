#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "teachctl/types.hpp"

namespace teachctl {

// Axis-aligned box in pixels: top-left corner plus extent.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  bool operator==(const BBox&) const = default;
};

struct Detection {
  ImageId image_id = 0;
  ClassId class_id = 0;
  double score = 0.0;
  BBox bbox;

  bool operator==(const Detection&) const = default;
};

struct GroundTruthBox {
  ImageId image_id = 0;
  ClassId class_id = 0;
  BBox bbox;

  bool operator==(const GroundTruthBox&) const = default;
};

struct ClassFilterCounts {
  std::size_t kept = 0;
  std::size_t dropped = 0;
  double threshold = 0.0;
};

struct FilterReport {
  std::vector<Detection> kept;
  std::map<ClassId, ClassFilterCounts> per_class;
};

using Thresholds = std::map<ClassId, double>;

// Keeps d iff d.score >= thresholds[d.class_id]. Input order is preserved.
// Every class present in `dets` must have a threshold.
std::vector<bool> keep_mask(std::span<const Detection> dets, const Thresholds& thresholds);
FilterReport filter(std::span<const Detection> dets, const Thresholds& thresholds);

double iou(const BBox& a, const BBox& b) noexcept;

struct ClassMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const ClassMetrics&) const = default;
};

// Precision, recall and F1 from counts; undefined ratios are reported as 0.
ClassMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) noexcept;

// Greedy matching per (image, class): detections in descending score order
// each take the unmatched ground-truth box with the highest IoU, if that IoU
// is >= iou_thr. Covers every class seen in either input.
std::map<ClassId, ClassMetrics> match_metrics(std::span<const Detection> pseudo,
                                              std::span<const GroundTruthBox> gt, double iou_thr = 0.5);

double macro_f1(const std::map<ClassId, ClassMetrics>& per_class) noexcept;

}  // namespace teachctl
