#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "protoagent/llm/chat.hpp"
#include "protoagent/llm/embedding.hpp"

namespace protoagent {

struct LlmConfig {
  std::string backend = "mock";  // "mock" | "http"
  struct Chat {
    std::string base_url;
    std::string model;
    double temperature = 0.0;
    std::optional<std::int64_t> seed;
    int max_tokens = 2048;
  } chat;
  struct Embed {
    std::string base_url;
    std::string model;
  } embed;
  std::optional<std::string> script;    // mock chat script
  std::size_t max_input_chars = 200000;  // prompt guard for the protocol tree
  std::string api_key_env = "LLM_API_KEY";

  static LlmConfig from_json(const nlohmann::json& j);
  /// Throws Error(ConfigError) when the file is missing or invalid.
  static LlmConfig load(const std::string& path);
};

ChatParams chat_params(const LlmConfig& config, std::string stage);

/// Mock without a script answers every call with ScriptMiss.
std::unique_ptr<ChatBackend> make_chat_backend(const LlmConfig& config);
std::unique_ptr<Embedder> make_embedder(const LlmConfig& config);

}  // namespace protoagent
