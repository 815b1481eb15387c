#include "protoagent/eval/pseudo_tasks.hpp"

#include <set>

#include "protoagent/assets.hpp"
#include "protoagent/common/json_schema.hpp"
#include "protoagent/llm/gateway.hpp"
#include "protoagent/llm/reply.hpp"
#include "protoagent/protocol/codec.hpp"

namespace protoagent {
namespace {

const JsonSchema& answer_schema() {
  static const JsonSchema schema = JsonSchema::from_asset("data/schemas/pseudo_tasks_answer.schema.json");
  return schema;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

std::string type_description(const DescriptionCatalog& catalog, const std::string& type) {
  auto it = catalog.types.find(type);
  if (it != catalog.types.end() && !it->second.description.empty()) return it->second.description;
  return replace_all(catalog.generic, "{type}", type);
}

struct Reading {
  std::vector<std::string> tasks;
  std::string problem;
};

Reading read_reply(const ChatMessage& reply, std::size_t n) {
  auto j = parse_json_reply(reply.content);
  if (reply.tool_call || !j) return {{}, "the reply is not a JSON object"};
  if (auto problem = answer_schema().check(*j)) return {{}, problem->message + " at " + problem->pointer};
  Reading out;
  for (const auto& t : (*j)["tasks"]) {
    auto text = t.get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {{}, "a task is blank"};
    out.tasks.push_back(std::move(text));
  }
  if (out.tasks.size() < n) {
    return {{}, "expected " + std::to_string(n) + " tasks, got " + std::to_string(out.tasks.size())};
  }
  out.tasks.resize(n);
  return out;
}

}  // namespace

std::string pseudo_task_prompt(std::size_t n) {
  return replace_all(std::string(assets::get("data/prompts/pseudo_tasks_v1.txt")), "{n}", std::to_string(n));
}

std::string pseudo_task_context(const RetrievedContext& retrieved, const ProtocolDocument& doc,
                                const DescriptionCatalog& catalog) {
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& e : retrieved.entities) {
    if (seen.insert(e.id).second) order.push_back(e.id);
  }
  for (const auto& [id, name] : retrieved.essentials) {
    if (seen.insert(id).second) order.push_back(id);
  }

  std::set<std::string> types;
  std::string snippets;
  for (const auto& id : order) {
    const Entity* found = find_entity(doc, id);
    if (!found) continue;
    Entity e = *found;
    e.children.clear();
    std::set<std::string> wanted;
    for (const auto& [eid, name] : retrieved.essentials) {
      if (eid == id) wanted.insert(name);
    }
    if (!wanted.empty()) {
      std::erase_if(e.essentials, [&](const Essential& es) { return !wanted.count(es.name); });
    }
    types.insert(e.entity_type);
    snippets += serialize_entity(e, false);
  }

  std::string out = "# Entity descriptions\n";
  for (const auto& type : types) out += "- " + type + ": " + type_description(catalog, type) + "\n";
  out += "\n# Retrieved elements\n" + snippets;
  return out;
}

std::vector<PseudoTask> generate_pseudo_tasks(const RetrievedContext& retrieved, const ProtocolDocument& doc,
                                              ChatBackend& llm, std::size_t n, const std::string& source_case_id,
                                              ChatParams params, const DescriptionCatalog& catalog) {
  if (n == 0) throw Error(ErrorCode::PreconditionFailed, "at least one pseudo task is needed");
  if (retrieved.empty()) throw Error(ErrorCode::PreconditionFailed, "the retrieved context is empty");
  params.stage = "pseudo_tasks";
  LlmGateway gateway(llm);
  std::vector<ChatMessage> messages = {ChatMessage::system(pseudo_task_prompt(n)),
                                       ChatMessage::user(pseudo_task_context(retrieved, doc, catalog))};
  ChatMessage reply = gateway.chat(messages, {}, params);
  Reading reading = read_reply(reply, n);
  if (!reading.problem.empty()) {
    messages.push_back(reply);
    messages.push_back(ChatMessage::user("Your reply could not be used: " + reading.problem +
                                         ". Answer with one JSON object {\"tasks\": [...]} holding " +
                                         std::to_string(n) + " non-empty strings."));
    reading = read_reply(gateway.chat(messages, {}, params), n);
    if (!reading.problem.empty()) throw Error(ErrorCode::MalformedOutput, reading.problem);
  }
  std::vector<PseudoTask> out;
  for (auto& t : reading.tasks) out.push_back({std::move(t), source_case_id});
  return out;
}

Faithfulness faithfulness_of(std::string_view request_text, const std::vector<PseudoTask>& tasks, Embedder& embedder) {
  if (tasks.empty()) throw Error(ErrorCode::PreconditionFailed, "no pseudo tasks");
  Faithfulness out;
  out.tasks = tasks;
  const EmbeddingVector request = embedder.embed(request_text);
  for (const auto& t : tasks) out.similarities.push_back(cosine_similarity(request, embedder.embed(t.text)));
  out.score = mean_sem(out.similarities);
  return out;
}

Faithfulness compute_faithfulness(std::string_view request_text, const RetrievedContext& retrieved,
                                  const ProtocolDocument& doc, ChatBackend& llm, Embedder& embedder, std::size_t n,
                                  const std::string& source_case_id, ChatParams params) {
  return faithfulness_of(request_text, generate_pseudo_tasks(retrieved, doc, llm, n, source_case_id, params), embedder);
}

}  // namespace protoagent
