#include "protoagent/llm/reply.hpp"

namespace protoagent {

std::optional<nlohmann::json> parse_json_reply(std::string_view content) {
  auto whole = nlohmann::json::parse(content, nullptr, false);
  if (!whole.is_discarded()) return whole.is_object() ? std::optional(whole) : std::nullopt;
  const auto open = content.find('{');
  const auto close = content.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
  auto inner = nlohmann::json::parse(content.substr(open, close - open + 1), nullptr, false);
  if (inner.is_discarded() || !inner.is_object()) return std::nullopt;
  return inner;
}

}  // namespace protoagent
