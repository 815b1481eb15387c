#include "protoagent/assets.hpp"

#include "protoagent/error.hpp"

namespace protoagent::assets {

std::string_view get(std::string_view path) {
  const auto& table = all();
  auto it = table.find(std::string(path));
  if (it == table.end()) {
    throw Error(ErrorCode::IoError, "asset not embedded: " + std::string(path));
  }
  return it->second;
}

}  // namespace protoagent::assets
