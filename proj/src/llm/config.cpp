#include "protoagent/llm/config.hpp"

#include <cstdlib>
#include <filesystem>

#include "protoagent/common/files.hpp"
#include "protoagent/error.hpp"
#include "protoagent/llm/http_backend.hpp"
#include "protoagent/llm/scripted.hpp"

namespace protoagent {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& message) {
  throw Error(ErrorCode::ConfigError, message, where);
}

void only_keys(const nlohmann::json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : keys) ok = ok || k == key;
    if (!ok) bad(where + "/" + key, "unknown config key '" + key + "'");
  }
}

template <typename T>
T get(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(where + "/" + key, std::string("wrong type for '") + key + "'");
  }
}

std::string api_key(const LlmConfig& config) {
  const char* key = std::getenv(config.api_key_env.c_str());
  return key ? key : "";
}

}  // namespace

LlmConfig LlmConfig::from_json(const nlohmann::json& j) {
  only_keys(j, {"backend", "chat", "embed", "script", "max_input_chars", "api_key_env", "$comment"}, "");
  LlmConfig c;
  c.backend = get<std::string>(j, "backend", c.backend, "");
  if (c.backend != "mock" && c.backend != "http") bad("/backend", "backend must be \"mock\" or \"http\"");
  if (j.contains("chat")) {
    const auto& chat = j["chat"];
    only_keys(chat, {"base_url", "model", "temperature", "seed", "max_tokens"}, "/chat");
    c.chat.base_url = get<std::string>(chat, "base_url", "", "/chat");
    c.chat.model = get<std::string>(chat, "model", "", "/chat");
    c.chat.temperature = get<double>(chat, "temperature", 0.0, "/chat");
    c.chat.max_tokens = get<int>(chat, "max_tokens", c.chat.max_tokens, "/chat");
    if (chat.contains("seed") && !chat["seed"].is_null()) c.chat.seed = get<std::int64_t>(chat, "seed", 0, "/chat");
  }
  if (j.contains("embed")) {
    only_keys(j["embed"], {"base_url", "model"}, "/embed");
    c.embed.base_url = get<std::string>(j["embed"], "base_url", "", "/embed");
    c.embed.model = get<std::string>(j["embed"], "model", "", "/embed");
  }
  if (j.contains("script") && !j["script"].is_null()) c.script = get<std::string>(j, "script", "", "");
  c.max_input_chars = get<std::size_t>(j, "max_input_chars", c.max_input_chars, "");
  c.api_key_env = get<std::string>(j, "api_key_env", c.api_key_env, "");
  if (c.backend == "http" && (c.chat.base_url.empty() || c.chat.model.empty())) {
    bad("/chat", "http backend needs chat.base_url and chat.model");
  }
  return c;
}

LlmConfig LlmConfig::load(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) bad(path, "config file not found");
  LlmConfig c;
  try {
    c = from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    bad(path, std::string("config is not valid JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConfigError) throw;
    bad(path + "#" + e.where(), e.message());
  }
  if (c.script && std::filesystem::path(*c.script).is_relative()) {
    c.script = (std::filesystem::path(path).parent_path() / *c.script).string();
  }
  return c;
}

ChatParams chat_params(const LlmConfig& config, std::string stage) {
  ChatParams p;
  p.temperature = config.chat.temperature;
  p.max_tokens = config.chat.max_tokens;
  p.seed = config.chat.seed;
  p.stage = std::move(stage);
  return p;
}

std::unique_ptr<ChatBackend> make_chat_backend(const LlmConfig& config) {
  if (config.backend == "http") {
    return std::make_unique<HttpChatBackend>(HttpEndpoint{config.chat.base_url, config.chat.model, api_key(config)});
  }
  return std::make_unique<ScriptedBackend>(config.script ? load_script(*config.script)
                                                         : std::vector<ScriptedExchange>{});
}

std::unique_ptr<Embedder> make_embedder(const LlmConfig& config) {
  if (config.backend == "http" && !config.embed.model.empty()) {
    const std::string base = config.embed.base_url.empty() ? config.chat.base_url : config.embed.base_url;
    return std::make_unique<HttpEmbedder>(HttpEndpoint{base, config.embed.model, api_key(config)});
  }
  return std::make_unique<HashingEmbedder>();
}

}  // namespace protoagent
