#include "protoagent/edit/action.hpp"

namespace protoagent {

std::vector<std::string> referenced_ids(const Action& action) {
  if (const auto* set = std::get_if<SetEssential>(&action)) return {set->entity_id};
  if (const auto* add = std::get_if<AddEntity>(&action)) return {add->template_entity_id, add->parent_id};
  return {std::get<DeleteEntity>(action).entity_id};
}

std::string describe(const Action& action) {
  if (const auto* set = std::get_if<SetEssential>(&action)) {
    return "set " + set->essential_name + " of " + set->entity_id + " to " + set->new_value.display();
  }
  if (const auto* add = std::get_if<AddEntity>(&action)) {
    std::string out = "copy " + add->template_entity_id + " under " + add->parent_id;
    if (add->new_name) out += " as '" + *add->new_name + "'";
    for (const auto& o : add->overrides) out += ", " + o.essential_name + "=" + o.value.display();
    return out;
  }
  return "delete " + std::get<DeleteEntity>(action).entity_id;
}

}  // namespace protoagent
