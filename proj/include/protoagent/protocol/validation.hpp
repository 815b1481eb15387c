#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "protoagent/error.hpp"
#include "protoagent/protocol/document.hpp"

namespace protoagent {

enum class Severity { Error, Warning };

struct Issue {
  Severity severity = Severity::Error;
  std::string code;     // e.g. DUPLICATE_ID, EMPTY_COMPOUND
  std::string path;     // entity-id path, '/' separated
  std::string message;
  std::optional<TextLocation> location;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Issue> issues;

  void add(Issue issue);
  bool has(std::string_view code) const;
  std::size_t error_count() const;
  void merge(const ValidationReport& other);
};

struct NumericRange {
  double min = 0.0;
  double max = 0.0;
};

/// Either a closed token set or a numeric interval.
using ValueConstraint = std::variant<std::set<std::string>, NumericRange>;

struct DependencyRule {
  std::string id;
  std::optional<std::string> entity_type;
  std::map<std::string, std::string> when_essentials;  // essential -> exact payload
  std::map<std::string, ValueConstraint> require;
};

/// Declarative structure rules loaded from a versioned JSON file.
struct RuleSet {
  std::string version;
  std::set<std::string> compound_types;
  std::map<std::string, ValueConstraint, std::less<>> allowed_values;
  std::vector<DependencyRule> dependencies;
  // Parent type -> admissible child types. Absent map admits everything.
  std::optional<std::map<std::string, std::set<std::string>, std::less<>>> placement;

  static const RuleSet& builtin();
  /// Throws Error(RuleSetError) naming the offending JSON pointer.
  static RuleSet from_json(std::string_view json_text);

  bool is_compound(std::string_view entity_type) const;
  bool placement_allowed(std::string_view parent_type, std::string_view child_type) const;
  /// Empty when allowed (or unconstrained), otherwise the reason.
  std::optional<std::string> value_problem(std::string_view essential_name,
                                           const TypedValue& value) const;
};

std::optional<std::string> constraint_problem(const ValueConstraint& constraint,
                                              const TypedValue& value);

/// Checks compound emptiness, allowed values, dependency rules and placement.
ValidationReport validate_structure(const ProtocolDocument& doc, const RuleSet& rules);

}  // namespace protoagent
