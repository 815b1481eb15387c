#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace protoagent {

enum class ChatRole { System, User, Assistant, Tool };

std::string_view to_string(ChatRole role);
std::optional<ChatRole> chat_role_from_string(std::string_view text);

struct ToolCall {
  std::string id;  // correlates the tool reply; may be empty
  std::string tool_name;
  nlohmann::json arguments = nlohmann::json::object();

  bool operator==(const ToolCall&) const = default;
};

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string content;
  std::optional<ToolCall> tool_call;        // assistant only
  std::optional<nlohmann::json> tool_result;  // tool only

  static ChatMessage system(std::string content);
  static ChatMessage user(std::string content);
  static ChatMessage assistant(std::string content);
  static ChatMessage call(ToolCall call);
  static ChatMessage tool(const ToolCall& call, nlohmann::json result);

  bool operator==(const ChatMessage&) const = default;
};

nlohmann::json to_json(const ChatMessage& message);
/// Throws Error(JsonSchemaError) with a pointer below `pointer`.
ChatMessage chat_message_from_json(const nlohmann::json& j, const std::string& pointer = "");
nlohmann::json to_json(const std::vector<ChatMessage>& messages);

struct ToolSchema {
  std::string name;
  std::string description;
  nlohmann::json parameters;  // JSON schema for the arguments object
  nlohmann::json result;      // JSON schema for the tool result
};

struct ChatParams {
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<std::int64_t> seed;
  // Pipeline stage issuing the call ("router", "planner", "pseudo_tasks").
  std::string stage;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatMessage complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                               const ChatParams& params) = 0;
};

/// Digest used to key scripted exchanges: SHA-256 of the compact JSON
/// encoding of the message list.
std::string prompt_digest(const std::vector<ChatMessage>& messages);

}  // namespace protoagent
