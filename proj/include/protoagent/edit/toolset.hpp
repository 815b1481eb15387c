#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "protoagent/edit/action.hpp"
#include "protoagent/error.hpp"
#include "protoagent/protocol/document.hpp"
#include "protoagent/protocol/validation.hpp"

namespace protoagent {

class Vocabulary;

struct EntityQuery {
  std::optional<std::string> type_filter;    // exact entity_type
  std::optional<std::string> name_contains;  // case-insensitive
  std::optional<std::string> keyword;        // name, type, essential names and values
  std::size_t max_results = 20;
};

struct EntityRef {
  std::string id;
  std::string name;
  std::string entity_type;
  std::string parent_id;  // empty for the root
  std::size_t depth = 0;

  bool operator==(const EntityRef&) const = default;
};

struct SideEffect {
  enum class Kind { ParentRemoved, IdAssigned };
  Kind kind;
  std::string entity_id;
  std::string detail;

  bool operator==(const SideEffect&) const = default;
};

std::string_view to_string(SideEffect::Kind kind);

struct EditResult {
  ProtocolDocument document;
  std::vector<Action> applied;
  std::vector<SideEffect> side_effects;
};

struct ActionFailure {
  std::size_t index;
  Error error;
};

/// Result of a transactional batch. On failure `result.document` is the
/// untouched input and `result.applied` is empty.
struct ApplyOutcome {
  EditResult result;
  std::optional<ActionFailure> failure;

  bool ok() const { return !failure.has_value(); }
};

struct EditOptions {
  bool strict = true;          // unregistered essentials are rejected
  bool check_rules = true;     // allowed-value rules enforced on writes
  bool create_missing = true;  // absent essentials may be created
};

/// Retrieval, attribute management and structural edits over immutable
/// documents. Every edit returns a new document; inputs are never modified.
class EditToolset {
 public:
  explicit EditToolset(RuleSet rules = RuleSet::builtin(), EditOptions options = {},
                       const Vocabulary* vocabulary = nullptr);

  const RuleSet& rules() const { return rules_; }
  const EditOptions& options() const { return options_; }
  const Vocabulary& vocabulary() const { return *vocabulary_; }

  std::vector<EntityRef> retrieve_entities(const ProtocolDocument& doc, const EntityQuery& query) const;

  std::vector<Essential> get_essentials(const ProtocolDocument& doc, std::string_view entity_id,
                                        const std::optional<std::vector<std::string>>& names = {}) const;

  ProtocolDocument set_essential(const ProtocolDocument& doc, std::string_view entity_id,
                                 std::string_view essential_name, const TypedValue& new_value) const;

  /// Deep-copies the template subtree under `parent_id` (appended last) with
  /// fresh ids `<id>-copy-<n>`; overrides apply to the copy's root.
  EditResult add_entity_from_template(const ProtocolDocument& doc, std::string_view template_entity_id,
                                      std::string_view parent_id,
                                      const std::vector<EssentialOverride>& overrides = {},
                                      const std::optional<std::string>& new_name = {}) const;

  /// Removes the subtree, then every compound ancestor left without children.
  EditResult delete_entity(const ProtocolDocument& doc, std::string_view entity_id) const;

  ApplyOutcome apply_actions(const ProtocolDocument& doc, const std::vector<Action>& actions) const;

  /// Applies a single action, throwing on failure.
  EditResult apply(const ProtocolDocument& doc, const Action& action) const;

 private:
  void write_essential(Entity& entity, const std::string& path, std::string_view essential_name,
                       const TypedValue& value) const;

  RuleSet rules_;
  EditOptions options_;
  const Vocabulary* vocabulary_;
};

}  // namespace protoagent
