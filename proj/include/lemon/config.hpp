// SPDX-License-Identifier: Apache-2.0
//
// JSON forms of ModelSpec, ExpansionPlan, ScheduleSpec and the duplicate map.
// Field names mirror the C++ structs. Unknown keys are rejected.

#pragma once

#include <json.hpp>
#include <string>

#include "lemon/expander.hpp"
#include "lemon/model.hpp"
#include "lemon/schedule.hpp"

namespace lemon {

using Json = nlohmann::json;

Json spec_to_json(const ModelSpec& spec);
/// Throws PlanError on missing, mistyped or unknown fields, or an invalid spec.
ModelSpec spec_from_json(const Json& j);

Json plan_to_json(const ExpansionPlan& plan);
ExpansionPlan plan_from_json(const Json& j);

Json schedule_to_json(const ScheduleSpec& spec);
ScheduleSpec schedule_from_json(const Json& j);

Json duplicate_map_to_json(const DuplicateMap& map);
DuplicateMap duplicate_map_from_json(const Json& j);

/// Parses a JSON file; IoError if unreadable, PlanError if not valid JSON.
Json read_json_file(const std::string& path);

}  // namespace lemon
