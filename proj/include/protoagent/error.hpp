#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace protoagent {

enum class ErrorCode {
  // protocol model
  SyntaxError,
  SchemaError,
  RuleSetError,
  // edit toolset
  EmptyQuery,
  UnknownEntity,
  UnknownEssential,
  TypeMismatch,
  InvalidValue,
  ValueNotAllowed,
  PlacementNotAllowed,
  CannotDeleteRoot,
  // llm gateway
  BackendError,
  RateLimited,
  ScriptMiss,
  SchemaViolation,
  // agent core
  MalformedRouterOutput,
  MalformedPlan,
  MalformedOutput,
  UnresolvedReference,
  JsonSchemaError,
  InvalidStatus,
  NotDispatchable,
  // evaluation
  DimensionMismatch,
  ZeroVector,
  EmptyGold,
  MissingResult,
  EmptyCaseSet,
  InvalidCase,
  // service / io
  NotFound,
  Busy,
  IoError,
  ConfigError,
  PreconditionFailed,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

/// Source position inside a text input, 1-based.
struct TextLocation {
  std::size_t line = 0;
  std::size_t column = 0;
};

/// The single exception type thrown across the library. `where` carries an
/// entity-id path, JSON pointer, or file name depending on the raising module.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string where = {},
        std::optional<TextLocation> location = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& where() const noexcept { return where_; }
  const std::optional<TextLocation>& location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::string where_;
  std::optional<TextLocation> location_;
};

}  // namespace protoagent
