#pragma once

#include <map>
#include <string>
#include <string_view>

namespace protoagent::assets {

/// Every embedded asset keyed by its repository-relative path.
const std::map<std::string, std::string_view>& all();

/// Throws Error(IoError) when the asset is not embedded.
std::string_view get(std::string_view path);

}  // namespace protoagent::assets
