#pragma once

#include <vector>

#include "protoagent/llm/chat.hpp"

namespace protoagent {

/// Front door for every chat call. Checks preconditions and re-validates
/// tool-call arguments, sending one rejected call back to the model.
class LlmGateway {
 public:
  explicit LlmGateway(ChatBackend& backend) : backend_(&backend) {}

  ChatMessage chat(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                   const ChatParams& params) const;

 private:
  ChatBackend* backend_;
};

}  // namespace protoagent
