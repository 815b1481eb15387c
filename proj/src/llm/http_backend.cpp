#include "protoagent/llm/http_backend.hpp"

#include <httplib.h>

#include "protoagent/error.hpp"

namespace protoagent {
namespace {

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path below the origin, no trailing slash
};

Target split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::ConfigError, "base_url needs a scheme", url);
  const auto slash = url.find('/', scheme + 3);
  Target t{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!t.prefix.empty() && t.prefix.back() == '/') t.prefix.pop_back();
  return t;
}

nlohmann::json post(const HttpEndpoint& endpoint, const std::string& path, const nlohmann::json& body) {
  const Target target = split_url(endpoint.base_url);
  httplib::Client client(target.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(endpoint.timeout_seconds);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

  auto res = client.Post(target.prefix + path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BackendError, "request failed: " + httplib::to_string(res.error()),
                endpoint.base_url + path);
  }
  if (res->status == 429) {
    const std::string retry = res->get_header_value("Retry-After");
    throw Error(ErrorCode::RateLimited, "rate limited" + (retry.empty() ? std::string() : "; retry after " + retry + " s"),
                retry);
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::BackendError,
                "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300), endpoint.base_url + path);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::BackendError, "response body is not JSON", endpoint.base_url + path);
  }
}

std::string call_id(const ToolCall& call) { return call.id.empty() ? call.tool_name : call.id; }

nlohmann::json wire_message(const ChatMessage& m) {
  switch (m.role) {
    case ChatRole::Tool:
      return {{"role", "tool"},
              {"tool_call_id", m.tool_call ? call_id(*m.tool_call) : std::string()},
              {"content", m.tool_result ? m.tool_result->dump() : m.content}};
    case ChatRole::Assistant:
      if (m.tool_call) {
        return {{"role", "assistant"},
                {"content", m.content.empty() ? nlohmann::json() : nlohmann::json(m.content)},
                {"tool_calls",
                 {{{"id", call_id(*m.tool_call)},
                   {"type", "function"},
                   {"function", {{"name", m.tool_call->tool_name}, {"arguments", m.tool_call->arguments.dump()}}}}}}};
      }
      [[fallthrough]];
    default:
      return {{"role", std::string(to_string(m.role))}, {"content", m.content}};
  }
}

}  // namespace

ChatMessage HttpChatBackend::complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                                      const ChatParams& params) {
  nlohmann::json body{{"model", endpoint_.model}, {"temperature", params.temperature}, {"max_tokens", params.max_tokens}};
  if (params.seed) body["seed"] = *params.seed;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) body["messages"].push_back(wire_message(m));
  if (!tools.empty()) {
    body["tools"] = nlohmann::json::array();
    for (const auto& t : tools) {
      body["tools"].push_back(
          {{"type", "function"},
           {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
    }
  }

  const nlohmann::json response = post(endpoint_, "/chat/completions", body);
  const auto* choice = response.contains("choices") && response["choices"].is_array() && !response["choices"].empty()
                           ? &response["choices"][0]
                           : nullptr;
  if (!choice || !choice->contains("message")) throw Error(ErrorCode::BackendError, "response has no choices");
  const auto& msg = (*choice)["message"];
  ChatMessage out = ChatMessage::assistant(msg.contains("content") && msg["content"].is_string()
                                               ? msg["content"].get<std::string>()
                                               : std::string());
  if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
    const auto& call = msg["tool_calls"][0];
    ToolCall tc;
    tc.id = call.value("id", "");
    const auto& fn = call.value("function", nlohmann::json::object());
    tc.tool_name = fn.value("name", "");
    const std::string args = fn.value("arguments", "{}");
    tc.arguments = nlohmann::json::parse(args, nullptr, false);
    if (tc.arguments.is_discarded()) tc.arguments = args;
    out.tool_call = std::move(tc);
  }
  return out;
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::PreconditionFailed, "cannot embed empty text");
  const nlohmann::json response = post(endpoint_, "/embeddings", {{"model", endpoint_.model}, {"input", text}});
  try {
    EmbeddingVector v{response.at("data").at(0).at("embedding").get<std::vector<double>>(), endpoint_.model};
    if (v.values.empty()) throw Error(ErrorCode::BackendError, "empty embedding");
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendError, std::string("unexpected embedding response: ") + e.what());
  }
}

}  // namespace protoagent
