#include "protoagent/llm/scripted.hpp"

#include "protoagent/common/files.hpp"
#include "protoagent/error.hpp"

namespace protoagent {
namespace {

[[noreturn]] void bad(const std::string& pointer, const std::string& message) {
  throw Error(ErrorCode::JsonSchemaError, message, pointer);
}

ScriptMatch parse_match(const nlohmann::json& j, const std::string& pointer) {
  if (!j.is_object()) bad(pointer, "match must be an object");
  ScriptMatch m;
  for (const auto& [key, value] : j.items()) {
    const std::string p = pointer + "/" + key;
    if (key == "stage") {
      if (!value.is_string()) bad(p, "stage must be a string");
      m.stage = value.get<std::string>();
    } else if (key == "ordinal") {
      if (!value.is_number_unsigned() || value.get<std::size_t>() == 0) bad(p, "ordinal must be a positive integer");
      m.ordinal = value.get<std::size_t>();
    } else if (key == "prompt_digest") {
      if (!value.is_string()) bad(p, "prompt_digest must be a string");
      m.prompt_digest = value.get<std::string>();
    } else {
      bad(p, "unexpected field '" + key + "'");
    }
  }
  if (!m.ordinal && !m.prompt_digest) bad(pointer, "match needs an ordinal or a prompt_digest");
  return m;
}

}  // namespace

std::vector<ScriptedExchange> parse_script(const nlohmann::json& j) {
  if (!j.is_array()) bad("/", "script must be an array of exchanges");
  std::vector<ScriptedExchange> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = "/" + std::to_string(i);
    const auto& e = j[i];
    if (!e.is_object() || !e.contains("match") || !e.contains("reply")) bad(p, "exchange needs match and reply");
    for (const auto& [key, _] : e.items()) {
      if (key != "match" && key != "reply" && key != "$comment") bad(p + "/" + key, "unexpected field '" + key + "'");
    }
    ScriptedExchange ex{parse_match(e["match"], p + "/match"), chat_message_from_json(e["reply"], p + "/reply")};
    if (ex.reply.role != ChatRole::Assistant) bad(p + "/reply/role", "scripted replies must be assistant messages");
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<ScriptedExchange> load_script(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_script(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("script is not valid JSON: ") + e.what(), path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, "invalid script: " + e.message(), path + "#" + e.where());
  }
}

nlohmann::json to_json(const std::vector<ScriptedExchange>& script) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& ex : script) {
    nlohmann::json match = nlohmann::json::object();
    if (ex.match.stage) match["stage"] = *ex.match.stage;
    if (ex.match.ordinal) match["ordinal"] = *ex.match.ordinal;
    if (ex.match.prompt_digest) match["prompt_digest"] = *ex.match.prompt_digest;
    out.push_back({{"match", match}, {"reply", to_json(ex.reply)}});
  }
  return out;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedExchange> script) : script_(std::move(script)) {}

ChatMessage ScriptedBackend::complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>&,
                                      const ChatParams& params) {
  std::lock_guard lock(mutex_);
  const std::size_t global = ++calls_;
  const std::size_t in_stage = ++stage_calls_[params.stage];
  std::optional<std::string> digest;
  for (const auto& ex : script_) {
    const auto& m = ex.match;
    if (m.stage && *m.stage != params.stage) continue;
    if (m.ordinal && *m.ordinal != (m.stage ? in_stage : global)) continue;
    if (m.prompt_digest) {
      if (!digest) digest = prompt_digest(messages);
      if (*m.prompt_digest != *digest) continue;
    }
    return ex.reply;
  }
  if (!digest) digest = prompt_digest(messages);
  throw Error(ErrorCode::ScriptMiss,
              "no scripted exchange for call " + std::to_string(global) + " (stage '" + params.stage + "' call " +
                  std::to_string(in_stage) + ", digest " + *digest + ")");
}

std::size_t ScriptedBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

ChatMessage RecordingBackend::complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                                       const ChatParams& params) {
  ChatMessage reply = inner_->complete(messages, tools, params);
  std::lock_guard lock(mutex_);
  ScriptMatch match;
  if (!params.stage.empty()) match.stage = params.stage;
  match.prompt_digest = prompt_digest(messages);
  recorded_.push_back({match, reply});
  return reply;
}

std::vector<ScriptedExchange> RecordingBackend::transcript() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

void RecordingBackend::save(const std::string& path) const {
  write_file_atomic(path, to_json(transcript()).dump(2) + "\n");
}

}  // namespace protoagent
