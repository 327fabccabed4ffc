#include "teachctl/coco_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "teachctl/error.hpp"

namespace teachctl {

using nlohmann::json;

namespace {

[[noreturn]] void bad_record(const char* what, std::size_t index, const std::string& why) {
  fail(ErrorKind::Data, std::string(what) + " record " + std::to_string(index) + ": " + why);
}

BBox parse_bbox(const json& rec, const char* what, std::size_t i) {
  if (!rec.contains("bbox")) bad_record(what, i, "missing \"bbox\"");
  const json& b = rec["bbox"];
  if (!b.is_array() || b.size() != 4) bad_record(what, i, "\"bbox\" must be [x, y, w, h]");
  for (const auto& v : b) {
    if (!v.is_number()) bad_record(what, i, "\"bbox\" entries must be numbers");
  }
  BBox box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  if (!(box.w > 0.0 && box.h > 0.0) || !std::isfinite(box.x) || !std::isfinite(box.y) || !std::isfinite(box.w) ||
      !std::isfinite(box.h)) {
    bad_record(what, i, "\"bbox\" needs finite coordinates and positive width and height");
  }
  return box;
}

std::int64_t parse_id(const json& rec, const char* key, const char* what, std::size_t i) {
  if (!rec.contains(key) || !rec[key].is_number_integer()) {
    bad_record(what, i, std::string("\"") + key + "\" must be an integer");
  }
  return rec[key].get<std::int64_t>();
}

const json& annotation_array(const json& doc, const char* what) {
  if (doc.is_array()) return doc;
  if (doc.is_object() && doc.contains("annotations") && doc["annotations"].is_array()) return doc["annotations"];
  fail(ErrorKind::Data, std::string(what) + ": expected a JSON array of records");
}

}  // namespace

std::vector<Detection> parse_detections(const json& doc) {
  const json& arr = annotation_array(doc, "results");
  std::vector<Detection> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& rec = arr[i];
    if (!rec.is_object()) bad_record("results", i, "not an object");
    Detection d;
    d.image_id = parse_id(rec, "image_id", "results", i);
    d.class_id = parse_id(rec, "category_id", "results", i);
    if (!rec.contains("score") || !rec["score"].is_number()) bad_record("results", i, "\"score\" must be a number");
    d.score = rec["score"].get<double>();
    if (!(d.score >= 0.0 && d.score <= 1.0)) bad_record("results", i, "\"score\" must be in [0, 1]");
    d.bbox = parse_bbox(rec, "results", i);
    out.push_back(d);
  }
  return out;
}

std::vector<GroundTruthBox> parse_ground_truth(const json& doc) {
  const json& arr = annotation_array(doc, "ground truth");
  std::vector<GroundTruthBox> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& rec = arr[i];
    if (!rec.is_object()) bad_record("ground truth", i, "not an object");
    GroundTruthBox g;
    g.image_id = parse_id(rec, "image_id", "ground truth", i);
    g.class_id = parse_id(rec, "category_id", "ground truth", i);
    g.bbox = parse_bbox(rec, "ground truth", i);
    out.push_back(g);
  }
  return out;
}

Thresholds ThresholdTable::resolve(const std::vector<ClassId>& classes) const {
  Thresholds out = per_class;
  for (ClassId id : classes) {
    if (out.contains(id)) continue;
    if (!fallback) fail(ErrorKind::Data, "no threshold for category " + std::to_string(id));
    out[id] = *fallback;
  }
  return out;
}

ThresholdTable parse_threshold_table(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::Data, "thresholds: expected an object {\"<category_id>\": N, ...}");
  ThresholdTable t;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number() || !(value.get<double>() >= 0.0 && value.get<double>() <= 1.0)) {
      fail(ErrorKind::Data, "thresholds." + key + ": must be a number in [0, 1]");
    }
    if (key == "default") {
      t.fallback = value.get<double>();
      continue;
    }
    try {
      std::size_t used = 0;
      const long long id = std::stoll(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
      t.per_class[id] = value.get<double>();
    } catch (const std::exception&) {
      fail(ErrorKind::Data, "thresholds: key \"" + key + "\" is not a category id");
    }
  }
  return t;
}

ThresholdTable thresholds_from_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "iter,class_id,mean,var,gamma,N") {
    fail(ErrorKind::Data, path.string() + ": expected header iter,class_id,mean,var,gamma,N");
  }
  ThresholdTable t;
  std::map<ClassId, std::size_t> last_iter;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell[6];
    for (auto& c : cell) std::getline(ss, c, ',');
    try {
      const std::size_t iter = std::stoull(cell[0]);
      const ClassId id = std::stoll(cell[1]);
      const double n = std::stod(cell[5]);
      auto it = last_iter.find(id);
      if (it == last_iter.end() || iter >= it->second) {
        last_iter[id] = iter;
        t.per_class[id] = n;
      }
    } catch (const std::exception&) {
      fail(ErrorKind::Data, path.string() + ": malformed row " + std::to_string(row));
    }
  }
  return t;
}

OfflineFilterResult filter_offline(const json& results, const ThresholdTable& table, const json* ground_truth,
                                   double iou_thr) {
  const auto dets = parse_detections(results);
  const json& records = annotation_array(results, "results");
  std::set<ClassId> seen;
  for (const auto& d : dets) seen.insert(d.class_id);
  const Thresholds thresholds = table.resolve({seen.begin(), seen.end()});

  OfflineFilterResult res;
  const auto keep = keep_mask(dets, thresholds);
  res.report = filter(dets, thresholds);
  res.kept_records = json::array();
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep[i]) res.kept_records.push_back(records[i]);
  }

  json per_class = json::object();
  for (const auto& [id, c] : res.report.per_class) {
    per_class[std::to_string(id)] = {{"kept", c.kept}, {"dropped", c.dropped}, {"threshold", c.threshold}};
  }
  res.report_json = {{"input", dets.size()}, {"kept", res.report.kept.size()}, {"per_class", per_class}};

  if (ground_truth) {
    const auto gt = parse_ground_truth(*ground_truth);
    res.metrics = match_metrics(res.report.kept, gt, iou_thr);
    json m = json::object();
    for (const auto& [id, cm] : *res.metrics) {
      m[std::to_string(id)] = {{"tp", cm.tp},       {"fp", cm.fp},         {"fn", cm.fn},
                               {"precision", cm.precision}, {"recall", cm.recall}, {"f1", cm.f1}};
    }
    res.report_json["metrics"] = m;
    res.report_json["macro_f1"] = macro_f1(*res.metrics);
  }
  return res;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Data, path.string() + ": " + e.what());
  }
}

}  // namespace teachctl
