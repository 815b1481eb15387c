#include "protoagent/llm/chat.hpp"

#include <array>

#include "protoagent/common/digest.hpp"
#include "protoagent/error.hpp"

namespace protoagent {
namespace {

constexpr std::array<std::string_view, 4> kRoles = {"system", "user", "assistant", "tool"};

[[noreturn]] void bad(const std::string& pointer, const std::string& message) {
  throw Error(ErrorCode::JsonSchemaError, message, pointer.empty() ? "/" : pointer);
}

}  // namespace

std::string_view to_string(ChatRole role) { return kRoles[static_cast<std::size_t>(role)]; }

std::optional<ChatRole> chat_role_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kRoles.size(); ++i) {
    if (kRoles[i] == text) return static_cast<ChatRole>(i);
  }
  return std::nullopt;
}

ChatMessage ChatMessage::system(std::string content) { return {ChatRole::System, std::move(content), {}, {}}; }
ChatMessage ChatMessage::user(std::string content) { return {ChatRole::User, std::move(content), {}, {}}; }
ChatMessage ChatMessage::assistant(std::string content) { return {ChatRole::Assistant, std::move(content), {}, {}}; }
ChatMessage ChatMessage::call(ToolCall call) { return {ChatRole::Assistant, "", std::move(call), {}}; }

// Tool replies keep the call they answer so backends can correlate ids.
ChatMessage ChatMessage::tool(const ToolCall& call, nlohmann::json result) {
  return {ChatRole::Tool, "", call, std::move(result)};
}

nlohmann::json to_json(const ChatMessage& message) {
  nlohmann::json j{{"role", std::string(to_string(message.role))}, {"content", message.content}};
  if (message.tool_call) {
    nlohmann::json call{{"tool_name", message.tool_call->tool_name}, {"arguments", message.tool_call->arguments}};
    if (!message.tool_call->id.empty()) call["id"] = message.tool_call->id;
    j["tool_call"] = std::move(call);
  }
  if (message.tool_result) j["tool_result"] = *message.tool_result;
  return j;
}

nlohmann::json to_json(const std::vector<ChatMessage>& messages) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : messages) out.push_back(to_json(m));
  return out;
}

ChatMessage chat_message_from_json(const nlohmann::json& j, const std::string& pointer) {
  if (!j.is_object()) bad(pointer, "message must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "role" && key != "content" && key != "tool_call" && key != "tool_result") {
      bad(pointer + "/" + key, "unexpected field '" + key + "'");
    }
  }
  ChatMessage m;
  if (!j.contains("role") || !j["role"].is_string()) bad(pointer + "/role", "role must be a string");
  auto role = chat_role_from_string(j["role"].get<std::string>());
  if (!role) bad(pointer + "/role", "unknown role '" + j["role"].get<std::string>() + "'");
  m.role = *role;
  if (j.contains("content")) {
    if (!j["content"].is_string()) bad(pointer + "/content", "content must be a string");
    m.content = j["content"].get<std::string>();
  }
  if (j.contains("tool_call")) {
    const auto& c = j["tool_call"];
    const std::string p = pointer + "/tool_call";
    if (!c.is_object()) bad(p, "tool_call must be an object");
    if (!c.contains("tool_name") || !c["tool_name"].is_string()) bad(p + "/tool_name", "tool_name must be a string");
    ToolCall call;
    call.tool_name = c["tool_name"].get<std::string>();
    if (c.contains("id")) {
      if (!c["id"].is_string()) bad(p + "/id", "id must be a string");
      call.id = c["id"].get<std::string>();
    }
    if (c.contains("arguments")) call.arguments = c["arguments"];
    m.tool_call = std::move(call);
  }
  if (j.contains("tool_result")) m.tool_result = j["tool_result"];
  if (m.role == ChatRole::Tool && !m.tool_result) bad(pointer + "/tool_result", "tool messages need a tool_result");
  if (m.tool_call && m.role != ChatRole::Assistant && m.role != ChatRole::Tool) {
    bad(pointer + "/tool_call", "only assistant and tool messages carry a tool_call");
  }
  return m;
}

std::string prompt_digest(const std::vector<ChatMessage>& messages) { return sha256_hex(to_json(messages).dump()); }

}  // namespace protoagent
