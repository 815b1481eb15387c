#include "protoagent/agent/router.hpp"

#include "protoagent/assets.hpp"
#include "protoagent/common/json_schema.hpp"
#include "protoagent/llm/gateway.hpp"
#include "protoagent/llm/reply.hpp"

namespace protoagent {
namespace {

constexpr std::string_view kRouterPrompt = "data/prompts/router_v1.txt";

const JsonSchema& router_schema() {
  static const JsonSchema schema = JsonSchema::from_asset("data/schemas/router_answer.schema.json");
  return schema;
}

const JsonSchema& structured_schema() {
  static const JsonSchema schema = JsonSchema::from_asset("data/schemas/structured_request.schema.json");
  return schema;
}

struct RouterReading {
  std::vector<SubRequest> subs;
  std::string problem;
};

RouterReading read_router_reply(const ChatMessage& reply) {
  if (reply.tool_call) return {{}, "the router takes no tools; answer with JSON"};
  auto j = parse_json_reply(reply.content);
  if (!j) return {{}, "the reply is not a JSON object"};
  if (auto problem = router_schema().check(*j)) return {{}, problem->message + " at " + problem->pointer};
  RouterReading out;
  const auto& items = (*j)["subrequests"];
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto category = request_category_from_string(items[i]["category"].get<std::string>());
    if (!category) {
      return {{}, "unknown category '" + items[i]["category"].get<std::string>() + "' at /subrequests/" +
                      std::to_string(i) + "/category"};
    }
    out.subs.push_back({items[i]["text"].get<std::string>(), *category, items[i].value("rationale", ""),
                        RequestOrigin::NaturalLanguage, std::nullopt});
  }
  return out;
}

std::string selector_phrase(const Selector& s) {
  std::string out = s.entity_type ? *s.entity_type + " entities" : std::string("entities");
  if (s.name_contains) out += " whose name contains \"" + *s.name_contains + "\"";
  return out;
}

std::string changes_phrase(const std::vector<EssentialChange>& changes) {
  std::string out;
  for (std::size_t i = 0; i < changes.size(); ++i) {
    if (i > 0) out += i + 1 == changes.size() ? " and " : ", ";
    out += changes[i].essential + " to " + changes[i].value.display();
  }
  return out;
}

SubRequest structured_subrequest(const StructuredRequest& r) {
  SubRequest sub;
  sub.origin = RequestOrigin::StructuredJson;
  sub.structured = r;
  switch (r.operation) {
    case StructuredRequest::Operation::Modify:
      sub.category = RequestCategory::Modification;
      sub.text = "Set " + changes_phrase(r.changes) + " on " + selector_phrase(*r.target);
      sub.rationale = "structured request: modify";
      break;
    case StructuredRequest::Operation::Add:
      sub.category = RequestCategory::Adding;
      sub.text = "Add a copy of " + selector_phrase(*r.template_selector) + " under " + selector_phrase(*r.parent);
      if (r.new_name) sub.text += " named \"" + *r.new_name + "\"";
      if (!r.changes.empty()) sub.text += " with " + changes_phrase(r.changes);
      sub.rationale = "structured request: add";
      break;
    case StructuredRequest::Operation::Delete:
      sub.category = RequestCategory::Deleting;
      sub.text = "Delete " + selector_phrase(*r.target);
      sub.rationale = "structured request: delete";
      break;
  }
  return sub;
}

}  // namespace

std::string_view router_prompt() { return assets::get(kRouterPrompt); }

std::vector<SubRequest> route(std::string_view request_text, ChatBackend& llm, const ChatParams& params) {
  if (request_text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::PreconditionFailed, "the request is empty");
  }
  ChatParams p = params;
  p.stage = "router";
  LlmGateway gateway(llm);
  std::vector<ChatMessage> messages = {ChatMessage::system(std::string(router_prompt())),
                                       ChatMessage::user("Request: " + std::string(request_text))};
  ChatMessage reply = gateway.chat(messages, {}, p);
  RouterReading reading = read_router_reply(reply);
  if (reading.problem.empty()) return reading.subs;

  messages.push_back(reply);
  messages.push_back(ChatMessage::user("Your reply could not be used: " + reading.problem +
                                       ". Answer again with one JSON object of the form "
                                       "{\"subrequests\": [{\"text\": ..., \"category\": ..., \"rationale\": ...}]}."));
  reading = read_router_reply(gateway.chat(messages, {}, p));
  if (!reading.problem.empty()) throw Error(ErrorCode::MalformedRouterOutput, reading.problem);
  return reading.subs;
}

std::vector<SubRequest> parse_structured_request(std::string_view json_text) {
  auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::JsonSchemaError, "request body is not valid JSON", "/");
  std::vector<SubRequest> out;
  auto one = [&](const nlohmann::json& item, const std::string& pointer) {
    if (auto problem = structured_schema().check(item)) {
      std::string where = pointer + (problem->pointer == "/" ? std::string() : problem->pointer);
      throw Error(ErrorCode::JsonSchemaError, problem->message, where.empty() ? "/" : where);
    }
    out.push_back(structured_subrequest(structured_request_from_json(item, pointer)));
  };
  if (j.is_array()) {
    if (j.empty()) throw Error(ErrorCode::JsonSchemaError, "request list is empty", "/");
    for (std::size_t i = 0; i < j.size(); ++i) one(j[i], "/" + std::to_string(i));
  } else {
    one(j, "");
  }
  return out;
}

}  // namespace protoagent
