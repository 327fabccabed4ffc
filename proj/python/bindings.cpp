#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "teachctl/error.hpp"
#include "teachctl/mask_scheduler.hpp"
#include "teachctl/state_json.hpp"
#include "teachctl/vfst.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace teachctl;

namespace {

std::string export_scheduler(const MaskScheduler& s) {
  return json{{"config", to_json(s.config())}, {"state", to_json(s.state())}}.dump();
}

MaskScheduler import_scheduler(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("scheduler state: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("config") || !doc.contains("state")) {
    fail(ErrorKind::Data, "scheduler state: expected {\"config\": ..., \"state\": ...}");
  }
  return MaskScheduler(scheduler_config_from_json(doc["config"]), scheduler_state_from_json(doc["state"]));
}

std::string export_vfst(const VfstController& v) {
  return json{{"config", to_json(v.config())}, {"states", to_json(v.states())}}.dump();
}

VfstController import_vfst(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("threshold state: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("config") || !doc.contains("states")) {
    fail(ErrorKind::Data, "threshold state: expected {\"config\": ..., \"states\": ...}");
  }
  return VfstController(vfst_config_from_json(doc["config"]), threshold_map_from_json(doc["states"]));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mask-ratio and class-threshold controllers for self-training loops";

  py::register_exception<Error>(m, "TeachctlError", PyExc_ValueError);

  m.def("step_size", [](double x, double eta_min, double eta_max, double k, double midpoint) {
    SchedulerConfig cfg;
    cfg.eta_min = eta_min;
    cfg.eta_max = eta_max;
    cfg.steepness = k;
    cfg.midpoint = midpoint;
    cfg.validate();
    return step_size(x, cfg);
  }, py::arg("x"), py::arg("eta_min") = 0.01, py::arg("eta_max") = 0.02, py::arg("k") = 10.0,
     py::arg("midpoint") = 0.5);

  m.def("smoothing_coefficient", [](std::size_t current_iter, std::size_t total_iters, double alpha_at,
                                    const std::string& mode) {
    VfstConfig cfg;
    cfg.alpha_at = alpha_at;
    cfg.gamma_mode = gamma_mode_from_string(mode);
    return smoothing_coefficient(current_iter, total_iters, cfg);
  }, py::arg("current_iter"), py::arg("total_iters"), py::arg("alpha_at") = 10.0, py::arg("mode") = "described");

  m.def("class_stats", [](const std::vector<double>& confidences) -> py::object {
    auto s = class_stats(confidences);
    if (!s) return py::none();
    return py::make_tuple(s->mean, s->var);
  }, py::arg("confidences"), "(mean, population variance), or None for an empty list");

  m.def("update_threshold", [](double n_old, double mean, double var, double gamma, double alpha_dt, double beta,
                               double min_dt, double max_dt) {
    VfstConfig cfg;
    cfg.alpha_dt = alpha_dt;
    cfg.beta = beta;
    cfg.min_dt = min_dt;
    cfg.max_dt = max_dt;
    return update_threshold(n_old, mean, var, gamma, cfg);
  }, py::arg("n_old"), py::arg("mean"), py::arg("var"), py::arg("gamma"), py::arg("alpha_dt") = 0.5,
     py::arg("beta") = 0.2, py::arg("min_dt") = 0.25, py::arg("max_dt") = 0.45);

  py::class_<MaskScheduler>(m, "MaskScheduler")
      .def(py::init([](double eta_min, double eta_max, double k, double midpoint, double mu_0, double mu_min,
                       double mu_max, std::size_t loss_window, std::size_t total_epochs) {
             SchedulerConfig cfg{eta_min, eta_max, k, midpoint, mu_0, mu_min, mu_max, loss_window, total_epochs};
             return MaskScheduler(cfg);
           }),
           py::arg("eta_min") = 0.01, py::arg("eta_max") = 0.02, py::arg("k") = 10.0, py::arg("midpoint") = 0.5,
           py::arg("mu_0") = 0.5, py::arg("mu_min") = 0.1, py::arg("mu_max") = 0.9, py::arg("loss_window") = 3,
           py::arg("total_epochs") = 100)
      .def("step", [](MaskScheduler& s, double loss) {
        s.update(loss);
        return py::make_tuple(s.mask_ratio(), s.step());
      }, py::arg("loss"), "Feed one loss value; returns (mask_ratio, step)")
      .def("advance_epoch", [](MaskScheduler& s) { s.advance_epoch(); })
      .def_property_readonly("mask_ratio", &MaskScheduler::mask_ratio)
      .def_property_readonly("eta", &MaskScheduler::step)
      .def_property_readonly("epoch", [](const MaskScheduler& s) { return s.state().epoch; })
      .def("export_state", &export_scheduler)
      .def_static("import_state", &import_scheduler, py::arg("text"));

  py::class_<VfstController>(m, "VfstController")
      .def(py::init([](const std::vector<ClassId>& classes, std::size_t total_iters, double alpha_dt, double beta,
                       double min_dt, double max_dt, double alpha_at, const std::string& gamma_mode,
                       double stats_floor, double n_init) {
             VfstConfig cfg;
             cfg.alpha_dt = alpha_dt;
             cfg.beta = beta;
             cfg.min_dt = min_dt;
             cfg.max_dt = max_dt;
             cfg.alpha_at = alpha_at;
             cfg.gamma_mode = gamma_mode_from_string(gamma_mode);
             cfg.stats_floor = stats_floor;
             cfg.n_init = n_init;
             cfg.total_iters = total_iters;
             return VfstController(cfg, classes);
           }),
           py::arg("classes"), py::arg("total_iters"), py::arg("alpha_dt") = 0.5, py::arg("beta") = 0.2,
           py::arg("min_dt") = 0.25, py::arg("max_dt") = 0.45, py::arg("alpha_at") = 10.0,
           py::arg("gamma_mode") = "described", py::arg("stats_floor") = 0.05, py::arg("n_init") = 0.3)
      .def("step", [](VfstController& v, const ConfidenceBatch& batch, std::size_t current_iter) {
        return v.update(batch, current_iter);
      }, py::arg("confidences"), py::arg("current_iter"), "Per-class confidence lists in; per-class thresholds out")
      .def_property_readonly("thresholds", &VfstController::thresholds)
      .def("export_state", &export_vfst)
      .def_static("import_state", &import_vfst, py::arg("text"));
}
