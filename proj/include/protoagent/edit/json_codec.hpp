#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoagent/edit/action.hpp"
#include "protoagent/edit/toolset.hpp"
#include "protoagent/protocol/document.hpp"
#include "protoagent/protocol/validation.hpp"

namespace protoagent {

// JSON encodings shared by planner output, tool calls, eval cases and the
// service API. Decoders throw Error(JsonSchemaError) with a JSON pointer in
// `where`, relative to `pointer`.

nlohmann::json to_json(const TypedValue& value);
TypedValue typed_value_from_json(const nlohmann::json& j, const std::string& pointer = "");

nlohmann::json to_json(const Action& action);
Action action_from_json(const nlohmann::json& j, const std::string& pointer = "");
nlohmann::json actions_to_json(const std::vector<Action>& actions);
std::vector<Action> actions_from_json(const nlohmann::json& j, const std::string& pointer = "");

nlohmann::json to_json(const Essential& essential);
nlohmann::json to_json(const EntityRef& ref);
nlohmann::json to_json(const SideEffect& effect);
nlohmann::json to_json(const ValidationReport& report);

}  // namespace protoagent
