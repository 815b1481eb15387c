#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "protoagent/protocol/document.hpp"

namespace protoagent {

struct SetEssential {
  std::string entity_id;
  std::string essential_name;
  TypedValue new_value;

  bool operator==(const SetEssential&) const = default;
};

struct EssentialOverride {
  std::string essential_name;
  TypedValue value;

  bool operator==(const EssentialOverride&) const = default;
};

struct AddEntity {
  std::string template_entity_id;
  std::string parent_id;
  std::vector<EssentialOverride> overrides;
  std::optional<std::string> new_name;

  bool operator==(const AddEntity&) const = default;
};

struct DeleteEntity {
  std::string entity_id;

  bool operator==(const DeleteEntity&) const = default;
};

using Action = std::variant<SetEssential, AddEntity, DeleteEntity>;

/// Ids an action refers to; all must exist when the action is applied.
std::vector<std::string> referenced_ids(const Action& action);

/// One-line human-readable rendering, e.g. "set PatientPositionEssential of
/// for-1 to FaceUpFeetFirst".
std::string describe(const Action& action);

}  // namespace protoagent
