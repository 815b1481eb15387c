#pragma once

#include <string_view>
#include <vector>

#include "protoagent/agent/types.hpp"
#include "protoagent/llm/chat.hpp"

namespace protoagent {

std::string_view router_prompt();

/// Decomposes and labels a natural-language request. One corrective retry
/// when the reply does not fit the expected JSON, then MalformedRouterOutput.
std::vector<SubRequest> route(std::string_view request_text, ChatBackend& llm, const ChatParams& params = {});

/// Deterministic, no LLM. Accepts one request object or an array of them.
std::vector<SubRequest> parse_structured_request(std::string_view json_text);

}  // namespace protoagent
