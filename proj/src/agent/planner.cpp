#include "protoagent/agent/planner.hpp"

#include <algorithm>
#include <set>

#include "protoagent/assets.hpp"
#include "protoagent/common/json_schema.hpp"
#include "protoagent/edit/json_codec.hpp"
#include "protoagent/llm/gateway.hpp"
#include "protoagent/llm/reply.hpp"
#include "protoagent/protocol/codec.hpp"
#include "protoagent/protocol/validation.hpp"

namespace protoagent {
namespace {

using nlohmann::json;

const JsonSchema& answer_schema() {
  static const JsonSchema schema = JsonSchema::from_asset("data/schemas/planner_answer.schema.json");
  return schema;
}

EntityRef ref_for(const ProtocolDocument& doc, std::string_view id) {
  auto loc = locate(doc, id);
  const Entity& e = *loc->entity;
  return {e.id, e.name, e.entity_type, loc->parent ? loc->parent->id : std::string(), loc->depth};
}

json error_json(const Error& e) {
  json j{{"code", std::string(to_string(e.code()))}, {"message", e.message()}};
  if (!e.where().empty()) j["where"] = e.where();
  return j;
}

std::string describe_entity(const Entity& e) { return e.entity_type + " '" + e.name + "' (" + e.id + ")"; }

std::string selector_phrase(const Selector& s) {
  std::string out = s.entity_type ? *s.entity_type : std::string("entity");
  if (s.name_contains) out += " with name containing \"" + *s.name_contains + "\"";
  return out;
}

// Structure issues present after the edit but not before it.
std::vector<Issue> new_structure_issues(const ProtocolDocument& before, const ProtocolDocument& after,
                                        const RuleSet& rules) {
  std::set<std::pair<std::string, std::string>> known;
  for (const auto& issue : validate_structure(before, rules).issues) known.emplace(issue.code, issue.path);
  std::vector<Issue> out;
  for (const auto& issue : validate_structure(after, rules).issues) {
    if (!known.count({issue.code, issue.path})) out.push_back(issue);
  }
  return out;
}

struct DryRun {
  ApplyOutcome outcome;
  std::vector<Issue> issues;
};

DryRun dry_run(const EditToolset& toolset, const ProtocolDocument& doc, const std::vector<Action>& actions) {
  DryRun run{toolset.apply_actions(doc, actions), {}};
  if (run.outcome.ok()) {
    run.issues = new_structure_issues(doc, run.outcome.result.document, toolset.rules());
    return run;
  }
  // Replay without value rules so rule violations surface as issues.
  EditOptions relaxed = toolset.options();
  relaxed.check_rules = false;
  EditToolset unchecked(toolset.rules(), relaxed, &toolset.vocabulary());
  auto lenient = unchecked.apply_actions(doc, actions);
  if (lenient.ok()) run.issues = new_structure_issues(doc, lenient.result.document, toolset.rules());
  return run;
}

std::string answer_problem(const std::string& content, RequestCategory category, std::vector<Action>& actions,
                           std::string& plan_text) {
  auto j = parse_json_reply(content);
  if (!j) return "the answer is not a JSON object";
  if (auto problem = answer_schema().check(*j)) return problem->message + " at " + problem->pointer;
  try {
    actions = actions_from_json((*j)["actions"], "/actions");
  } catch (const Error& e) {
    return e.message() + " at " + e.where();
  }
  if (actions.empty()) return "the answer contains no actions";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!action_fits_category(actions[i], category)) {
      return "action " + std::to_string(i) + " (" + describe(actions[i]) + ") does not fit a " +
             std::string(to_string(category)) + " sub-request";
    }
  }
  plan_text = (*j)["plan_text"].get<std::string>();
  return {};
}

bool check_references(Proposal& p, const ProtocolDocument& doc) {
  for (std::size_t i = 0; i < p.actions.size(); ++i) {
    for (const auto& id : referenced_ids(p.actions[i])) {
      if (find_entity(doc, id)) continue;
      p.status = ProposalStatus::Failed;
      p.error = ProposalError{ErrorCode::UnresolvedReference,
                              "action " + std::to_string(i) + " references unknown entity '" + id + "'", id};
      return false;
    }
  }
  return true;
}

}  // namespace

std::string_view planner_prompt() { return assets::get("data/prompts/planner_v1.txt"); }

const std::vector<ToolSchema>& planner_tools() {
  static const std::vector<ToolSchema> tools = [] {
    std::vector<ToolSchema> out;
    for (const auto& t : json::parse(assets::get("data/schemas/planner_tools.json"))) {
      out.push_back({t["name"].get<std::string>(), t["description"].get<std::string>(), t["parameters"], t["result"]});
    }
    return out;
  }();
  return tools;
}

Planner::Planner(const EditToolset& toolset, PlannerOptions options) : toolset_(&toolset), options_(std::move(options)) {
  options_.params.stage = "planner";
}

json Planner::run_tool(const ToolCall& call, const ProtocolDocument& doc, RetrievedContext* retrieved,
                       std::size_t* widest_retrieval) const {
  const json& args = call.arguments;
  try {
    if (call.tool_name == "retrieve_entities") {
      EntityQuery q;
      if (args.contains("type_filter")) q.type_filter = args["type_filter"].get<std::string>();
      if (args.contains("name_contains")) q.name_contains = args["name_contains"].get<std::string>();
      if (args.contains("keyword")) q.keyword = args["keyword"].get<std::string>();
      if (args.contains("max_results")) q.max_results = args["max_results"].get<std::size_t>();
      auto refs = toolset_->retrieve_entities(doc, q);
      json entities = json::array();
      for (const auto& r : refs) {
        entities.push_back(to_json(r));
        if (retrieved) retrieved->add_entity(r);
      }
      if (widest_retrieval) *widest_retrieval = std::max(*widest_retrieval, refs.size());
      return {{"entities", std::move(entities)}};
    }
    if (call.tool_name == "get_essentials") {
      const std::string id = args.at("entity_id").get<std::string>();
      std::optional<std::vector<std::string>> names;
      if (args.contains("names")) names = args["names"].get<std::vector<std::string>>();
      auto essentials = toolset_->get_essentials(doc, id, names);
      json list = json::array();
      std::string xml;
      if (retrieved) retrieved->add_entity(ref_for(doc, id));
      for (const auto& e : essentials) {
        list.push_back(to_json(e));
        xml += serialize_essential(e, 0);
        if (retrieved) retrieved->add_essential(id, e.name);
      }
      return {{"entity_id", id}, {"essentials", std::move(list)}, {"xml", xml}};
    }
    if (call.tool_name == "validate_actions") {
      auto actions = actions_from_json(args.at("actions"), "/actions");
      DryRun run = dry_run(*toolset_, doc, actions);
      json out{{"ok", run.outcome.ok()}};
      if (!run.outcome.ok()) {
        out["failure"] = {{"index", run.outcome.failure->index}, {"error", error_json(run.outcome.failure->error)}};
      }
      out["side_effects"] = json::array();
      for (const auto& s : run.outcome.result.side_effects) out["side_effects"].push_back(to_json(s));
      out["issues"] = json::array();
      for (const auto& i : run.issues) {
        out["issues"].push_back({{"code", i.code}, {"path", i.path}, {"message", i.message}});
      }
      return out;
    }
    return {{"error", {{"code", "UnknownTool"}, {"message", "no tool named '" + call.tool_name + "'"}}}};
  } catch (const Error& e) {
    return {{"error", error_json(e)}};
  } catch (const json::exception& e) {
    return {{"error", {{"code", "InvalidArguments"}, {"message", e.what()}}}};
  }
}

void Planner::finalize(Proposal& p, const ProtocolDocument& doc) const {
  if (!check_references(p, doc)) return;
  DryRun run = dry_run(*toolset_, doc, p.actions);
  if (run.outcome.ok()) {
    std::string effects;
    for (const auto& s : run.outcome.result.side_effects) {
      if (s.kind == SideEffect::Kind::ParentRemoved) {
        effects += "\n- " + s.entity_id + " is removed as well: " + s.detail;
      } else {
        effects += "\n- new entity id " + s.entity_id;
      }
    }
    if (!effects.empty()) p.plan_text += "\n\nPredicted effects:" + effects;
  } else {
    const auto& f = *run.outcome.failure;
    p.warnings.push_back("dry run fails at action " + std::to_string(f.index) + ": " +
                         std::string(to_string(f.error.code())) + ": " + f.error.message());
  }
  for (const auto& issue : run.issues) p.warnings.push_back(issue.code + " at " + issue.path + ": " + issue.message);
}

Proposal Planner::plan(const SubRequest& sub, const ProtocolDocument& doc, const MemoryContext& memory,
                       ChatBackend& llm, std::string id) const {
  if (!sub.dispatchable()) throw Error(ErrorCode::PreconditionFailed, "Others sub-requests are not planned");
  Proposal p;
  p.id = std::move(id);
  p.subrequest = sub;

  LlmGateway gateway(llm);
  std::vector<ChatMessage> messages = {
      ChatMessage::system(std::string(planner_prompt()) + "\n\n" + render_memory(memory, options_.max_tree_chars)),
      ChatMessage::user("Category: " + std::string(to_string(sub.category)) + "\nSub-request: " + sub.text)};
  std::size_t widest = 0;
  bool retried = false;
  for (std::size_t step = 0; step < options_.max_steps; ++step) {
    ChatMessage reply = gateway.chat(messages, planner_tools(), options_.params);
    if (reply.tool_call) {
      json result = run_tool(*reply.tool_call, doc, &p.retrieved, &widest);
      messages.push_back(reply);
      messages.push_back(ChatMessage::tool(*reply.tool_call, std::move(result)));
      continue;
    }
    std::string problem = answer_problem(reply.content, sub.category, p.actions, p.plan_text);
    if (problem.empty()) {
      p.low_confidence = p.actions.size() == 1 && widest > 1;
      finalize(p, doc);
      return p;
    }
    if (retried) throw Error(ErrorCode::MalformedPlan, problem);
    retried = true;
    p.actions.clear();
    messages.push_back(reply);
    messages.push_back(ChatMessage::user("Your answer was rejected: " + problem +
                                         ". Reply with one JSON object {\"actions\": [...], \"plan_text\": \"...\"}."));
  }
  throw Error(ErrorCode::MalformedPlan, "no final answer within " + std::to_string(options_.max_steps) + " steps");
}

Proposal Planner::plan_structured(const SubRequest& sub, const ProtocolDocument& doc, std::string id) const {
  if (!sub.structured) throw Error(ErrorCode::PreconditionFailed, "sub-request carries no structured request");
  const StructuredRequest& r = *sub.structured;
  Proposal p;
  p.id = std::move(id);
  p.subrequest = sub;

  auto resolve = [&](const Selector& s, const char* field) -> std::optional<std::vector<EntityRef>> {
    EntityQuery q{s.entity_type, s.name_contains, std::nullopt, 100000};
    auto refs = toolset_->retrieve_entities(doc, q);
    if (refs.empty()) {
      p.status = ProposalStatus::Failed;
      p.error = ProposalError{ErrorCode::UnresolvedReference, "no entity matches " + selector_phrase(s),
                              std::string("/") + field};
      p.plan_text = "Nothing to do: no entity matches " + selector_phrase(s) + ".";
      return std::nullopt;
    }
    return refs;
  };
  auto entity = [&](const EntityRef& ref) { return describe_entity(*find_entity(doc, ref.id)); };

  std::string lines;
  switch (r.operation) {
    case StructuredRequest::Operation::Modify: {
      auto targets = resolve(*r.target, "target");
      if (!targets) return p;
      for (const auto& t : *targets) {
        p.retrieved.add_entity(t);
        for (const auto& c : r.changes) {
          p.retrieved.add_essential(t.id, c.essential);
          p.actions.push_back(SetEssential{t.id, c.essential, c.value});
          lines += "\n- set " + c.essential + " of " + entity(t) + " to " + c.value.display();
        }
      }
      p.plan_text = "Structured modify request." + lines;
      break;
    }
    case StructuredRequest::Operation::Delete: {
      auto targets = resolve(*r.target, "target");
      if (!targets) return p;
      std::set<std::string> chosen;
      for (const auto& t : *targets) chosen.insert(t.id);
      for (const auto& t : *targets) {
        p.retrieved.add_entity(t);
        // Skip targets already inside another target's subtree.
        bool nested = false;
        for (auto loc = locate(doc, t.parent_id); loc && !nested; loc = loc->parent ? locate(doc, loc->parent->id) : std::nullopt) {
          nested = chosen.count(loc->entity->id) > 0;
        }
        if (nested) continue;
        p.actions.push_back(DeleteEntity{t.id});
        lines += "\n- delete " + entity(t);
      }
      p.plan_text = "Structured delete request." + lines;
      break;
    }
    case StructuredRequest::Operation::Add: {
      auto templates = resolve(*r.template_selector, "template");
      if (!templates) return p;
      auto parents = resolve(*r.parent, "parent");
      if (!parents) return p;
      const EntityRef& tmpl = templates->front();
      p.low_confidence = templates->size() > 1;
      p.retrieved.add_entity(tmpl);
      std::vector<EssentialOverride> overrides;
      for (const auto& c : r.changes) overrides.push_back({c.essential, c.value});
      for (const auto& parent : *parents) {
        p.retrieved.add_entity(parent);
        p.actions.push_back(AddEntity{tmpl.id, parent.id, overrides, r.new_name});
        lines += "\n- add a copy of " + entity(tmpl) + " under " + entity(parent);
        for (const auto& c : r.changes) lines += ", " + c.essential + " = " + c.value.display();
      }
      if (p.low_confidence) {
        p.warnings.push_back(std::to_string(templates->size()) + " entities match the template selector; using " +
                             tmpl.id);
      }
      p.plan_text = "Structured add request." + lines;
      break;
    }
  }
  finalize(p, doc);
  return p;
}

EditResult execute(Proposal& proposal, const ProtocolDocument& doc, const EditToolset& toolset) {
  if (proposal.status != ProposalStatus::Approved) {
    throw Error(ErrorCode::InvalidStatus,
                "proposal " + proposal.id + " is " + std::string(to_string(proposal.status)) + ", not Approved",
                proposal.id);
  }
  ApplyOutcome outcome = toolset.apply_actions(doc, proposal.actions);
  if (!outcome.ok()) {
    proposal.transition(ProposalStatus::Failed);
    proposal.error = ProposalError::from(outcome.failure->error);
    throw outcome.failure->error;
  }
  proposal.transition(ProposalStatus::Applied);
  return std::move(outcome.result);
}

}  // namespace protoagent
