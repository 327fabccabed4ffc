#pragma once

// COCO results-format I/O for offline pseudo-label filtering.
//
// Detections: [{"image_id", "category_id", "bbox": [x, y, w, h], "score"}, ...]
// Ground truth: the same records without "score", either as a bare array or
// under an "annotations" key.

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "teachctl/pseudo_labels.hpp"

namespace teachctl {

// ErrorKind::Data naming the first offending record index.
std::vector<Detection> parse_detections(const nlohmann::json& doc);
std::vector<GroundTruthBox> parse_ground_truth(const nlohmann::json& doc);

// Per-class thresholds. Keys are category ids; an optional "default" key
// covers classes not listed.
struct ThresholdTable {
  Thresholds per_class;
  std::optional<double> fallback;

  // Resolves a threshold for every class in `classes`. ErrorKind::Data when a
  // class has none.
  Thresholds resolve(const std::vector<ClassId>& classes) const;
};

ThresholdTable parse_threshold_table(const nlohmann::json& doc);
// Final N per class from a thresholds.csv trajectory.
ThresholdTable thresholds_from_trajectory_csv(const std::filesystem::path& path);

struct OfflineFilterResult {
  nlohmann::json kept_records;  // input records, unchanged, in input order
  FilterReport report;
  std::optional<std::map<ClassId, ClassMetrics>> metrics;
  nlohmann::json report_json;
};

OfflineFilterResult filter_offline(const nlohmann::json& results, const ThresholdTable& thresholds,
                                   const nlohmann::json* ground_truth = nullptr, double iou_thr = 0.5);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace teachctl
