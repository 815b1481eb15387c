#pragma once

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

namespace protoagent {

/// Extracts the JSON object from an assistant reply, tolerating Markdown
/// code fences and prose around it.
std::optional<nlohmann::json> parse_json_reply(std::string_view content);

}  // namespace protoagent
