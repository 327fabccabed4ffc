#pragma once

// CSV and JSON report emission. Column orders are fixed:
//
//   metrics.csv     iter,epoch,mu,eta,gamma,
//                   then per class (ascending id): threshold_<id>,kept_<id>,precision_<id>,recall_<id>,f1_<id>,
//                   then macro_f1,l_mask,l_teach,l_total
//   thresholds.csv  iter,class_id,mean,var,gamma,N
//   schedule.csv    iter,epoch,x,eta,mu
//
// Numbers use the shortest decimal form that round-trips to the same double.

#include <filesystem>
#include <map>
#include <ostream>
#include <string>

#include "json.hpp"
#include "teachctl/pseudo_labels.hpp"
#include "teachctl/run_config.hpp"
#include "teachctl/teach_loop.hpp"

namespace teachctl {

std::string format_number(double v);

void write_metrics_csv(std::ostream& out, const MetricsLog& log);
void write_thresholds_csv(std::ostream& out, const MetricsLog& log);
void write_schedule_csv(std::ostream& out, const MetricsLog& log, std::size_t total_epochs);

// Pseudo-label counts summed over the rows of the last epoch present in the log.
std::map<ClassId, ClassMetrics> final_epoch_metrics(const MetricsLog& log);

nlohmann::json summary_json(const RunConfig& cfg, const RunState& state);

void write_class_metrics_csv(std::ostream& out, const std::map<ClassId, ClassMetrics>& metrics);

// Writes `content` to `path`, creating parent directories. ErrorKind::Io on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace teachctl
