#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "protoagent/error.hpp"

namespace protoagent {

struct SchemaProblem {
  std::string pointer;  // JSON pointer into the checked value
  std::string keyword;  // failing schema keyword
  std::string message;
};

/// Draft-04 JSON schema backed by RapidJSON's validator.
class JsonSchema {
 public:
  explicit JsonSchema(const nlohmann::json& schema);
  static JsonSchema from_asset(std::string_view asset_path);

  JsonSchema(JsonSchema&&) noexcept;
  JsonSchema& operator=(JsonSchema&&) noexcept;
  ~JsonSchema();

  const nlohmann::json& document() const { return schema_; }

  std::optional<SchemaProblem> check(const nlohmann::json& value) const;
  /// Throws Error(code) carrying the problem's pointer.
  void require(const nlohmann::json& value, ErrorCode code) const;

 private:
  struct Impl;
  nlohmann::json schema_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace protoagent
