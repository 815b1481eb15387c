#include "protoagent/llm/gateway.hpp"

#include <set>

#include "protoagent/common/json_schema.hpp"
#include "protoagent/error.hpp"

namespace protoagent {
namespace {

std::optional<std::string> call_problem(const ToolCall& call, const std::vector<ToolSchema>& tools) {
  for (const auto& tool : tools) {
    if (tool.name != call.tool_name) continue;
    if (auto problem = JsonSchema(tool.parameters).check(call.arguments)) {
      return "arguments for " + call.tool_name + " rejected at " + problem->pointer + ": " + problem->message;
    }
    return std::nullopt;
  }
  return "unknown tool '" + call.tool_name + "'";
}

}  // namespace

ChatMessage LlmGateway::chat(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                             const ChatParams& params) const {
  if (messages.empty()) throw Error(ErrorCode::PreconditionFailed, "chat needs at least one message");
  if (messages.front().role != ChatRole::System) {
    throw Error(ErrorCode::PreconditionFailed, "the first chat message must have the system role");
  }
  std::set<std::string> names;
  for (const auto& tool : tools) {
    if (!names.insert(tool.name).second) {
      throw Error(ErrorCode::PreconditionFailed, "duplicate tool name '" + tool.name + "'");
    }
  }

  ChatMessage reply = backend_->complete(messages, tools, params);
  if (!reply.tool_call) return reply;
  auto problem = call_problem(*reply.tool_call, tools);
  if (!problem) return reply;

  std::vector<ChatMessage> retry = messages;
  retry.push_back(reply);
  retry.push_back(ChatMessage::tool(*reply.tool_call, {{"error", {{"code", "SchemaViolation"}, {"message", *problem}}}}));
  reply = backend_->complete(retry, tools, params);
  if (reply.tool_call) {
    if (auto again = call_problem(*reply.tool_call, tools)) throw Error(ErrorCode::SchemaViolation, *again);
  }
  return reply;
}

}  // namespace protoagent
