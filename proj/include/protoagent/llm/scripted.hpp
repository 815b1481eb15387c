#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "protoagent/llm/chat.hpp"

namespace protoagent {

struct ScriptMatch {
  std::optional<std::string> stage;
  std::optional<std::size_t> ordinal;  // 1-based, per stage when stage is set
  std::optional<std::string> prompt_digest;
};

struct ScriptedExchange {
  ScriptMatch match;
  ChatMessage reply;
};

std::vector<ScriptedExchange> parse_script(const nlohmann::json& j);
std::vector<ScriptedExchange> load_script(const std::string& path);
nlohmann::json to_json(const std::vector<ScriptedExchange>& script);

/// Replays a fixed script. A call no exchange matches fails with ScriptMiss.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptedExchange> script);

  ChatMessage complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                       const ChatParams& params) override;

  std::size_t call_count() const;

 private:
  std::vector<ScriptedExchange> script_;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
  std::map<std::string, std::size_t> stage_calls_;
};

/// Wraps another backend and captures every exchange as a replayable,
/// digest-keyed script.
class RecordingBackend : public ChatBackend {
 public:
  explicit RecordingBackend(ChatBackend& inner) : inner_(&inner) {}

  ChatMessage complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                       const ChatParams& params) override;

  std::vector<ScriptedExchange> transcript() const;
  void save(const std::string& path) const;

 private:
  ChatBackend* inner_;
  mutable std::mutex mutex_;
  std::vector<ScriptedExchange> recorded_;
};

}  // namespace protoagent
