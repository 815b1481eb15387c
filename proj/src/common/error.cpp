#include "protoagent/error.hpp"

#include <array>
#include <utility>

namespace protoagent {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 33> kNames{{
    {ErrorCode::SyntaxError, "SyntaxError"},
    {ErrorCode::SchemaError, "SchemaError"},
    {ErrorCode::RuleSetError, "RuleSetError"},
    {ErrorCode::EmptyQuery, "EmptyQuery"},
    {ErrorCode::UnknownEntity, "UnknownEntity"},
    {ErrorCode::UnknownEssential, "UnknownEssential"},
    {ErrorCode::TypeMismatch, "TypeMismatch"},
    {ErrorCode::InvalidValue, "InvalidValue"},
    {ErrorCode::ValueNotAllowed, "ValueNotAllowed"},
    {ErrorCode::PlacementNotAllowed, "PlacementNotAllowed"},
    {ErrorCode::CannotDeleteRoot, "CannotDeleteRoot"},
    {ErrorCode::BackendError, "BackendError"},
    {ErrorCode::RateLimited, "RateLimited"},
    {ErrorCode::ScriptMiss, "ScriptMiss"},
    {ErrorCode::SchemaViolation, "SchemaViolation"},
    {ErrorCode::MalformedRouterOutput, "MalformedRouterOutput"},
    {ErrorCode::MalformedPlan, "MalformedPlan"},
    {ErrorCode::MalformedOutput, "MalformedOutput"},
    {ErrorCode::UnresolvedReference, "UnresolvedReference"},
    {ErrorCode::JsonSchemaError, "JsonSchemaError"},
    {ErrorCode::InvalidStatus, "InvalidStatus"},
    {ErrorCode::NotDispatchable, "NotDispatchable"},
    {ErrorCode::DimensionMismatch, "DimensionMismatch"},
    {ErrorCode::ZeroVector, "ZeroVector"},
    {ErrorCode::EmptyGold, "EmptyGold"},
    {ErrorCode::MissingResult, "MissingResult"},
    {ErrorCode::EmptyCaseSet, "EmptyCaseSet"},
    {ErrorCode::InvalidCase, "InvalidCase"},
    {ErrorCode::NotFound, "NotFound"},
    {ErrorCode::Busy, "Busy"},
    {ErrorCode::IoError, "IoError"},
    {ErrorCode::ConfigError, "ConfigError"},
    {ErrorCode::PreconditionFailed, "PreconditionFailed"},
}};

std::string compose(const std::string& message, const std::string& where,
                    const std::optional<TextLocation>& location) {
  std::string out = message;
  if (location) {
    out += " (line " + std::to_string(location->line) + ", column " +
           std::to_string(location->column) + ")";
  }
  if (!where.empty()) out += " at " + where;
  return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

Error::Error(ErrorCode code, std::string message, std::string where,
             std::optional<TextLocation> location)
    : std::runtime_error(compose(message, where, location)),
      code_(code),
      message_(std::move(message)),
      where_(std::move(where)),
      location_(location) {}

}  // namespace protoagent
