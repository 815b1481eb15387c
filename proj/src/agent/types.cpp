#include "protoagent/agent/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "protoagent/edit/json_codec.hpp"

namespace protoagent {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 4> kCategories = {"Adding", "Modification", "Deleting", "Others"};
constexpr std::array<std::string_view, 6> kStatuses = {"Pending", "Approved", "Rejected",
                                                       "Applied", "Failed",   "NotDispatchable"};

[[noreturn]] void bad(const std::string& pointer, const std::string& message) {
  throw Error(ErrorCode::JsonSchemaError, message, pointer.empty() ? "/" : pointer);
}

const json& need(const json& j, const char* key, const std::string& pointer) {
  if (!j.is_object()) bad(pointer, "expected an object");
  if (!j.contains(key)) bad(pointer + "/" + key, std::string("missing required property '") + key + "'");
  return j[key];
}

std::string need_string(const json& j, const char* key, const std::string& pointer) {
  const json& v = need(j, key, pointer);
  if (!v.is_string()) bad(pointer + "/" + key, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

json selector_json(const Selector& s) {
  json j = json::object();
  if (s.entity_type) j["entity_type"] = *s.entity_type;
  if (s.name_contains) j["name_contains"] = *s.name_contains;
  return j;
}

Selector selector_from(const json& j, const std::string& pointer) {
  if (!j.is_object()) bad(pointer, "selector must be an object");
  Selector s;
  for (const auto& [key, value] : j.items()) {
    if (key != "entity_type" && key != "name_contains") bad(pointer + "/" + key, "unexpected property '" + key + "'");
    if (!value.is_string() || value.get_ref<const std::string&>().empty()) {
      bad(pointer + "/" + key, key + " must be a non-empty string");
    }
  }
  if (j.contains("entity_type")) s.entity_type = j["entity_type"].get<std::string>();
  if (j.contains("name_contains")) s.name_contains = j["name_contains"].get<std::string>();
  if (!s.entity_type && !s.name_contains) bad(pointer, "selector needs entity_type or name_contains");
  return s;
}

json essential_pairs(const RetrievedContext& r) {
  json out = json::array();
  for (const auto& [id, name] : r.essentials) out.push_back({{"entity_id", id}, {"essential_name", name}});
  return out;
}

}  // namespace

std::string_view to_string(RequestCategory category) { return kCategories[static_cast<std::size_t>(category)]; }

std::optional<RequestCategory> request_category_from_string(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "adding" || lower == "add") return RequestCategory::Adding;
  if (lower == "modification" || lower == "modify") return RequestCategory::Modification;
  if (lower == "deleting" || lower == "delete") return RequestCategory::Deleting;
  if (lower == "others" || lower == "other") return RequestCategory::Others;
  return std::nullopt;
}

std::string_view to_string(RequestOrigin origin) {
  return origin == RequestOrigin::NaturalLanguage ? "NaturalLanguage" : "StructuredJson";
}

void RetrievedContext::add_entity(const EntityRef& ref) {
  for (const auto& e : entities) {
    if (e.id == ref.id) return;
  }
  entities.push_back(ref);
}

void RetrievedContext::add_essential(const std::string& entity_id, const std::string& name) {
  std::pair<std::string, std::string> key{entity_id, name};
  if (std::find(essentials.begin(), essentials.end(), key) == essentials.end()) essentials.push_back(std::move(key));
}

std::string_view to_string(ProposalStatus status) { return kStatuses[static_cast<std::size_t>(status)]; }

std::optional<ProposalStatus> proposal_status_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kStatuses.size(); ++i) {
    if (kStatuses[i] == text) return static_cast<ProposalStatus>(i);
  }
  return std::nullopt;
}

bool transition_allowed(ProposalStatus from, ProposalStatus to) {
  if (from == ProposalStatus::Pending) return to == ProposalStatus::Approved || to == ProposalStatus::Rejected;
  if (from == ProposalStatus::Approved) return to == ProposalStatus::Applied || to == ProposalStatus::Failed;
  return false;
}

void Proposal::transition(ProposalStatus to) {
  if (!transition_allowed(status, to)) {
    throw Error(ErrorCode::InvalidStatus,
                "proposal " + id + " is " + std::string(to_string(status)) + " and cannot become " +
                    std::string(to_string(to)),
                id);
  }
  status = to;
}

bool action_fits_category(const Action& action, RequestCategory category) {
  switch (category) {
    case RequestCategory::Adding:
      return std::holds_alternative<AddEntity>(action);
    case RequestCategory::Modification:
      return std::holds_alternative<SetEssential>(action);
    case RequestCategory::Deleting:
      return std::holds_alternative<DeleteEntity>(action);
    default:
      return false;
  }
}

json to_json(const StructuredRequest& r) {
  static constexpr std::array<const char*, 3> kOps = {"modify", "add", "delete"};
  json j{{"operation", kOps[static_cast<std::size_t>(r.operation)]}};
  if (r.target) j["target"] = selector_json(*r.target);
  if (!r.changes.empty()) {
    j["changes"] = json::array();
    for (const auto& c : r.changes) j["changes"].push_back({{"essential", c.essential}, {"value", to_json(c.value)}});
  }
  if (r.template_selector) j["template"] = selector_json(*r.template_selector);
  if (r.parent) j["parent"] = selector_json(*r.parent);
  if (r.new_name) j["new_name"] = *r.new_name;
  if (r.text) j["text"] = *r.text;
  return j;
}

StructuredRequest structured_request_from_json(const json& j, const std::string& pointer) {
  if (!j.is_object()) bad(pointer, "request must be an object");
  for (const auto& [key, _] : j.items()) {
    static const std::array<std::string_view, 7> kKeys = {"operation", "target", "changes", "template",
                                                          "parent",    "new_name", "text"};
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      bad(pointer + "/" + key, "unexpected property '" + key + "'");
    }
  }
  StructuredRequest r;
  const std::string op = need_string(j, "operation", pointer);
  if (op == "modify") {
    r.operation = StructuredRequest::Operation::Modify;
  } else if (op == "add") {
    r.operation = StructuredRequest::Operation::Add;
  } else if (op == "delete") {
    r.operation = StructuredRequest::Operation::Delete;
  } else {
    bad(pointer + "/operation", "operation must be modify, add or delete");
  }
  if (j.contains("target")) r.target = selector_from(j["target"], pointer + "/target");
  if (j.contains("template")) r.template_selector = selector_from(j["template"], pointer + "/template");
  if (j.contains("parent")) r.parent = selector_from(j["parent"], pointer + "/parent");
  if (j.contains("changes")) {
    const json& changes = j["changes"];
    if (!changes.is_array()) bad(pointer + "/changes", "changes must be an array");
    for (std::size_t i = 0; i < changes.size(); ++i) {
      const std::string p = pointer + "/changes/" + std::to_string(i);
      if (!changes[i].is_object()) bad(p, "change must be an object");
      for (const auto& [key, _] : changes[i].items()) {
        if (key != "essential" && key != "value") bad(p + "/" + key, "unexpected property '" + key + "'");
      }
      r.changes.push_back(
          {need_string(changes[i], "essential", p), typed_value_from_json(need(changes[i], "value", p), p + "/value")});
    }
  }
  if (j.contains("new_name")) r.new_name = need_string(j, "new_name", pointer);
  if (j.contains("text")) r.text = need_string(j, "text", pointer);

  switch (r.operation) {
    case StructuredRequest::Operation::Modify:
      if (r.changes.empty()) bad(pointer + "/changes", "modify requests need changes");
      if (!r.target) bad(pointer + "/target", "modify requests need a target");
      break;
    case StructuredRequest::Operation::Add:
      if (!r.template_selector) bad(pointer + "/template", "add requests need a template");
      if (!r.parent) bad(pointer + "/parent", "add requests need a parent");
      break;
    case StructuredRequest::Operation::Delete:
      if (!r.target) bad(pointer + "/target", "delete requests need a target");
      if (!r.changes.empty()) bad(pointer + "/changes", "delete requests take no changes");
      break;
  }
  return r;
}

json to_json(const SubRequest& sub) {
  json j{{"text", sub.text},
         {"category", std::string(to_string(sub.category))},
         {"rationale", sub.rationale},
         {"origin", std::string(to_string(sub.origin))}};
  if (sub.structured) j["structured"] = to_json(*sub.structured);
  return j;
}

SubRequest subrequest_from_json(const json& j, const std::string& pointer) {
  SubRequest s;
  s.text = need_string(j, "text", pointer);
  auto category = request_category_from_string(need_string(j, "category", pointer));
  if (!category) bad(pointer + "/category", "unknown category");
  s.category = *category;
  s.rationale = j.contains("rationale") ? need_string(j, "rationale", pointer) : "";
  const std::string origin = j.contains("origin") ? need_string(j, "origin", pointer) : "NaturalLanguage";
  if (origin != "NaturalLanguage" && origin != "StructuredJson") bad(pointer + "/origin", "unknown origin");
  s.origin = origin == "NaturalLanguage" ? RequestOrigin::NaturalLanguage : RequestOrigin::StructuredJson;
  if (j.contains("structured")) s.structured = structured_request_from_json(j["structured"], pointer + "/structured");
  return s;
}

json to_json(const RetrievedContext& r) {
  json entities = json::array();
  for (const auto& e : r.entities) entities.push_back(to_json(e));
  return {{"entities", std::move(entities)}, {"essentials", essential_pairs(r)}};
}

json to_json(const Proposal& p) {
  json j{{"id", p.id},
         {"subrequest", to_json(p.subrequest)},
         {"retrieved", to_json(p.retrieved)},
         {"actions", actions_to_json(p.actions)},
         {"plan_text", p.plan_text},
         {"status", std::string(to_string(p.status))},
         {"low_confidence", p.low_confidence},
         {"warnings", p.warnings}};
  if (p.error) {
    j["error"] = {{"code", std::string(to_string(p.error->code))}, {"message", p.error->message}};
    if (!p.error->where.empty()) j["error"]["where"] = p.error->where;
  }
  return j;
}

json to_json(const std::vector<Proposal>& proposals) {
  json out = json::array();
  for (const auto& p : proposals) out.push_back(to_json(p));
  return out;
}

Proposal proposal_from_json(const json& j, const std::string& pointer) {
  Proposal p;
  p.id = need_string(j, "id", pointer);
  p.subrequest = subrequest_from_json(need(j, "subrequest", pointer), pointer + "/subrequest");
  const json& retrieved = need(j, "retrieved", pointer);
  const json& entities = need(retrieved, "entities", pointer + "/retrieved");
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const std::string q = pointer + "/retrieved/entities/" + std::to_string(i);
    const json& e = entities[i];
    p.retrieved.entities.push_back({need_string(e, "id", q), need_string(e, "name", q),
                                    need_string(e, "entity_type", q), need_string(e, "parent_id", q),
                                    need(e, "depth", q).get<std::size_t>()});
  }
  const json& essentials = need(retrieved, "essentials", pointer + "/retrieved");
  for (std::size_t i = 0; i < essentials.size(); ++i) {
    const std::string q = pointer + "/retrieved/essentials/" + std::to_string(i);
    p.retrieved.essentials.emplace_back(need_string(essentials[i], "entity_id", q),
                                        need_string(essentials[i], "essential_name", q));
  }
  p.actions = actions_from_json(need(j, "actions", pointer), pointer + "/actions");
  p.plan_text = need_string(j, "plan_text", pointer);
  auto status = proposal_status_from_string(need_string(j, "status", pointer));
  if (!status) bad(pointer + "/status", "unknown status");
  p.status = *status;
  p.low_confidence = need(j, "low_confidence", pointer).get<bool>();
  for (const auto& w : need(j, "warnings", pointer)) p.warnings.push_back(w.get<std::string>());
  if (j.contains("error")) {
    auto code = error_code_from_string(need_string(j["error"], "code", pointer + "/error"));
    if (!code) bad(pointer + "/error/code", "unknown error code");
    p.error = ProposalError{*code, need_string(j["error"], "message", pointer + "/error"), j["error"].value("where", "")};
  }
  return p;
}

}  // namespace protoagent
