#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoagent/edit/action.hpp"
#include "protoagent/edit/toolset.hpp"
#include "protoagent/error.hpp"

namespace protoagent {

enum class RequestCategory { Adding, Modification, Deleting, Others };

std::string_view to_string(RequestCategory category);
/// Accepts the category names case-insensitively plus add/modify/delete/other.
std::optional<RequestCategory> request_category_from_string(std::string_view text);

enum class RequestOrigin { NaturalLanguage, StructuredJson };

std::string_view to_string(RequestOrigin origin);

struct Selector {
  std::optional<std::string> entity_type;
  std::optional<std::string> name_contains;

  bool operator==(const Selector&) const = default;
};

struct EssentialChange {
  std::string essential;
  TypedValue value;

  bool operator==(const EssentialChange&) const = default;
};

struct StructuredRequest {
  enum class Operation { Modify, Add, Delete };
  Operation operation = Operation::Modify;
  std::optional<Selector> target;
  std::vector<EssentialChange> changes;
  std::optional<Selector> template_selector;
  std::optional<Selector> parent;
  std::optional<std::string> new_name;
  std::optional<std::string> text;

  bool operator==(const StructuredRequest&) const = default;
};

struct SubRequest {
  std::string text;
  RequestCategory category = RequestCategory::Others;
  std::string rationale;
  RequestOrigin origin = RequestOrigin::NaturalLanguage;
  std::optional<StructuredRequest> structured;

  bool dispatchable() const { return category != RequestCategory::Others; }
  bool operator==(const SubRequest&) const = default;
};

struct RetrievedContext {
  std::vector<EntityRef> entities;
  std::vector<std::pair<std::string, std::string>> essentials;  // (entity_id, essential_name)

  bool empty() const { return entities.empty() && essentials.empty(); }
  void add_entity(const EntityRef& ref);
  void add_essential(const std::string& entity_id, const std::string& name);
  bool operator==(const RetrievedContext&) const = default;
};

enum class ProposalStatus { Pending, Approved, Rejected, Applied, Failed, NotDispatchable };

std::string_view to_string(ProposalStatus status);
std::optional<ProposalStatus> proposal_status_from_string(std::string_view text);
/// Pending→{Approved,Rejected}, Approved→{Applied,Failed}.
bool transition_allowed(ProposalStatus from, ProposalStatus to);

struct ProposalError {
  ErrorCode code;
  std::string message;
  std::string where;

  static ProposalError from(const Error& e) { return {e.code(), e.message(), e.where()}; }
  bool operator==(const ProposalError&) const = default;
};

struct Proposal {
  std::string id;
  SubRequest subrequest;
  RetrievedContext retrieved;
  std::vector<Action> actions;
  std::string plan_text;
  ProposalStatus status = ProposalStatus::Pending;
  bool low_confidence = false;
  std::vector<std::string> warnings;
  std::optional<ProposalError> error;

  /// Throws Error(InvalidStatus) for transitions outside the state machine.
  void transition(ProposalStatus to);
  bool operator==(const Proposal&) const = default;
};

/// Category purity: the action variants a category admits.
bool action_fits_category(const Action& action, RequestCategory category);

nlohmann::json to_json(const StructuredRequest& request);
nlohmann::json to_json(const SubRequest& sub);
nlohmann::json to_json(const RetrievedContext& retrieved);
nlohmann::json to_json(const Proposal& proposal);
nlohmann::json to_json(const std::vector<Proposal>& proposals);

/// Throws Error(JsonSchemaError) with a pointer.
StructuredRequest structured_request_from_json(const nlohmann::json& j, const std::string& pointer = "");
SubRequest subrequest_from_json(const nlohmann::json& j, const std::string& pointer = "");
Proposal proposal_from_json(const nlohmann::json& j, const std::string& pointer = "");

}  // namespace protoagent
