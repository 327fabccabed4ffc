#pragma once

// JSON fragments for controller and run state. Checkpoints and the Python
// bindings share these. Malformed fragments throw ErrorKind::Data.

#include "json.hpp"
#include "teachctl/feature_masking.hpp"
#include "teachctl/mask_scheduler.hpp"
#include "teachctl/recon_decoder.hpp"
#include "teachctl/teach_loop.hpp"
#include "teachctl/vfst.hpp"

namespace teachctl {

nlohmann::json to_json(const SchedulerConfig& cfg);
SchedulerConfig scheduler_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SchedulerState& state);
SchedulerState scheduler_state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const VfstConfig& cfg);
VfstConfig vfst_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ThresholdMap& states);
ThresholdMap threshold_map_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ParamVector& p);
ParamVector param_vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TeacherStudentState& s);
TeacherStudentState teacher_student_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DecoderParams& p);
DecoderParams decoder_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FeatureMap& f);
FeatureMap feature_map_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricsRow& row);
MetricsRow metrics_row_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunState& s);
RunState run_state_from_json(const nlohmann::json& j);

}  // namespace teachctl
