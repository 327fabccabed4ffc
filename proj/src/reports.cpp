#include "teachctl/reports.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "teachctl/error.hpp"

namespace teachctl {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(std::ostream& out, const MetricsLog& log) {
  out << "iter,epoch,mu,eta,gamma";
  if (!log.empty()) {
    for (const auto& c : log.front().classes) {
      const auto id = std::to_string(c.class_id);
      out << ",threshold_" << id << ",kept_" << id << ",precision_" << id << ",recall_" << id << ",f1_" << id;
    }
  }
  out << ",macro_f1,l_mask,l_teach,l_total\n";
  for (const auto& r : log) {
    out << r.iter << ',' << r.epoch << ',' << format_number(r.mu) << ',' << format_number(r.eta) << ','
        << format_number(r.gamma);
    for (const auto& c : r.classes) {
      out << ',' << format_number(c.threshold) << ',' << c.kept << ',' << format_number(c.metrics.precision) << ','
          << format_number(c.metrics.recall) << ',' << format_number(c.metrics.f1);
    }
    out << ',' << format_number(r.macro_f1) << ',' << format_number(r.l_mask) << ',' << format_number(r.l_teach)
        << ',' << format_number(r.l_total) << '\n';
  }
}

void write_thresholds_csv(std::ostream& out, const MetricsLog& log) {
  out << "iter,class_id,mean,var,gamma,N\n";
  for (const auto& r : log) {
    for (const auto& c : r.classes) {
      out << r.iter << ',' << c.class_id << ',' << format_number(c.mean) << ',' << format_number(c.var) << ','
          << format_number(r.gamma) << ',' << format_number(c.threshold) << '\n';
    }
  }
}

void write_schedule_csv(std::ostream& out, const MetricsLog& log, std::size_t total_epochs) {
  out << "iter,epoch,x,eta,mu\n";
  for (const auto& r : log) {
    const double x = static_cast<double>(r.epoch) / static_cast<double>(total_epochs);
    out << r.iter << ',' << r.epoch << ',' << format_number(x) << ',' << format_number(r.eta) << ','
        << format_number(r.mu) << '\n';
  }
}

std::map<ClassId, ClassMetrics> final_epoch_metrics(const MetricsLog& log) {
  std::map<ClassId, ClassMetrics> out;
  if (log.empty()) return out;
  const std::size_t last_epoch = log.back().epoch;
  std::map<ClassId, ClassMetrics> counts;
  for (const auto& r : log) {
    if (r.epoch != last_epoch) continue;
    for (const auto& c : r.classes) {
      auto& m = counts[c.class_id];
      m.tp += c.metrics.tp;
      m.fp += c.metrics.fp;
      m.fn += c.metrics.fn;
    }
  }
  for (const auto& [id, m] : counts) out[id] = metrics_from_counts(m.tp, m.fp, m.fn);
  return out;
}

nlohmann::json summary_json(const RunConfig& cfg, const RunState& state) {
  using nlohmann::json;
  const auto per_class = final_epoch_metrics(state.log);
  json classes = json::object();
  for (const auto& [id, m] : per_class) {
    classes[std::to_string(id)] = {{"tp", m.tp},       {"fp", m.fp},         {"fn", m.fn},
                                   {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  }
  json thresholds = json::object();
  for (const auto& [id, t] : state.thresholds) thresholds[std::to_string(id)] = t.n;
  const double final_mu = cfg.training.ablation.fixed_mask_ratio.value_or(state.scheduler.mu);
  return {{"iterations", state.iter},
          {"total_iterations", cfg.training.loop.total_iters()},
          {"final_epoch", state.log.empty() ? 0 : state.log.back().epoch},
          {"final_mu", final_mu},
          {"final_eta", state.scheduler.eta},
          {"final_thresholds", thresholds},
          {"final_epoch_pseudo_labels", classes},
          {"final_epoch_macro_f1", macro_f1(per_class)}};
}

void write_class_metrics_csv(std::ostream& out, const std::map<ClassId, ClassMetrics>& metrics) {
  out << "class_id,tp,fp,fn,precision,recall,f1\n";
  for (const auto& [id, m] : metrics) {
    out << id << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << format_number(m.precision) << ','
        << format_number(m.recall) << ',' << format_number(m.f1) << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace teachctl
