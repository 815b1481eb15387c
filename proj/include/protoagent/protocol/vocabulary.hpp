#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "protoagent/protocol/document.hpp"

namespace protoagent {

/// Registered entity types and the essentials each type may carry. The
/// shipped vocabulary extrapolates from the handful of names visible in real
/// protocol excerpts; see docs/protocol-schema.md.
class Vocabulary {
 public:
  static const Vocabulary& builtin();
  static Vocabulary from_json(std::string_view json_text);

  bool has_type(std::string_view entity_type) const;
  std::optional<ValueType> essential_type(std::string_view entity_type,
                                          std::string_view essential_name) const;
  std::set<std::string> types() const;
  const std::string& version() const { return version_; }

 private:
  std::string version_;
  std::map<std::string, std::map<std::string, ValueType, std::less<>>, std::less<>> types_;
};

}  // namespace protoagent
