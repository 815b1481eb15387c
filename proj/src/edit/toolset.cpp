#include "protoagent/edit/toolset.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "protoagent/protocol/codec.hpp"
#include "protoagent/protocol/vocabulary.hpp"

namespace protoagent {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_ci(std::string_view haystack, const std::string& needle_lower) {
  return lower(haystack).find(needle_lower) != std::string::npos;
}

bool nodes_contain(const std::vector<CompositeNode>& nodes, const std::string& needle) {
  for (const auto& node : nodes) {
    if (contains_ci(node.name, needle) || contains_ci(node.text, needle)) return true;
    if (nodes_contain(node.children, needle)) return true;
  }
  return false;
}

bool keyword_matches(const Entity& e, const std::string& needle) {
  if (contains_ci(e.name, needle) || contains_ci(e.entity_type, needle)) {
    return true;
  }
  for (const auto& essential : e.essentials) {
    if (contains_ci(essential.name, needle) || contains_ci(essential.value.scalar, needle)) return true;
    if (nodes_contain(essential.value.composite, needle)) return true;
  }
  return false;
}

struct Located {
  EntityPath path;
  std::string id_path;
};

Located require_entity(const ProtocolDocument& doc, std::string_view id) {
  auto loc = locate(doc, id);
  if (!loc) throw Error(ErrorCode::UnknownEntity, "no entity with id '" + std::string(id) + "'", std::string(id));
  return {loc->path, id_path(doc, id)};
}

void remove_at(Entity& root, const EntityPath& path) {
  EntityPath parent_path(path.begin(), path.end() - 1);
  Entity& parent = entity_at(root, parent_path);
  parent.children.erase(parent.children.begin() + static_cast<std::ptrdiff_t>(path.back()));
}

}  // namespace

std::string_view to_string(SideEffect::Kind kind) {
  return kind == SideEffect::Kind::ParentRemoved ? "ParentRemoved" : "IdAssigned";
}

EditToolset::EditToolset(RuleSet rules, EditOptions options, const Vocabulary* vocabulary)
    : rules_(std::move(rules)),
      options_(options),
      vocabulary_(vocabulary ? vocabulary : &Vocabulary::builtin()) {}

std::vector<EntityRef> EditToolset::retrieve_entities(const ProtocolDocument& doc,
                                                      const EntityQuery& query) const {
  if (!query.type_filter && !query.name_contains && !query.keyword) {
    throw Error(ErrorCode::EmptyQuery, "entity query needs at least one filter");
  }
  if (query.max_results == 0) throw Error(ErrorCode::PreconditionFailed, "max_results must be positive");
  const std::string name_needle = query.name_contains ? lower(*query.name_contains) : std::string();
  const std::string keyword_needle = query.keyword ? lower(*query.keyword) : std::string();

  std::vector<EntityRef> out;
  visit_preorder(doc.root, [&](const Entity& e, const Entity* parent, std::size_t depth) {
    if (out.size() >= query.max_results) return;
    if (query.type_filter && e.entity_type != *query.type_filter) return;
    if (query.name_contains && !contains_ci(e.name, name_needle)) return;
    if (query.keyword && !keyword_matches(e, keyword_needle)) return;
    out.push_back({e.id, e.name, e.entity_type, parent ? parent->id : std::string(), depth});
  });
  return out;
}

std::vector<Essential> EditToolset::get_essentials(const ProtocolDocument& doc, std::string_view entity_id,
                                                   const std::optional<std::vector<std::string>>& names) const {
  const Entity* e = find_entity(doc, entity_id);
  if (!e) {
    throw Error(ErrorCode::UnknownEntity, "no entity with id '" + std::string(entity_id) + "'",
                std::string(entity_id));
  }
  if (!names) return e->essentials;
  std::vector<Essential> out;
  for (const auto& essential : e->essentials) {
    if (std::find(names->begin(), names->end(), essential.name) != names->end()) out.push_back(essential);
  }
  return out;
}

void EditToolset::write_essential(Entity& entity, const std::string& path, std::string_view essential_name,
                                  const TypedValue& value) const {
  const std::string name(essential_name);
  const std::string where = path + "#" + name;
  if (name.empty()) throw Error(ErrorCode::InvalidValue, "essential name must not be empty", where);
  if (auto problem = payload_problem(value)) throw Error(ErrorCode::InvalidValue, *problem, where);

  Essential* existing = entity.find_essential(name);
  if (existing) {
    if (existing->value.type != value.type) {
      throw Error(ErrorCode::TypeMismatch,
                  name + " holds " + std::string(to_string(existing->value.type)) + ", not " +
                      std::string(to_string(value.type)),
                  where);
    }
  } else {
    auto registered = vocabulary_->essential_type(entity.entity_type, name);
    if (registered && *registered != value.type) {
      throw Error(ErrorCode::TypeMismatch,
                  name + " is registered as " + std::string(to_string(*registered)) + ", not " +
                      std::string(to_string(value.type)),
                  where);
    }
    if (!options_.create_missing) {
      throw Error(ErrorCode::UnknownEssential, entity.id + " has no essential " + name, where);
    }
    if (!registered && options_.strict) {
      throw Error(ErrorCode::UnknownEssential, name + " is not registered for " + entity.entity_type, where);
    }
  }
  if (options_.check_rules) {
    if (auto problem = rules_.value_problem(name, value)) throw Error(ErrorCode::ValueNotAllowed, *problem, where);
  }
  if (existing) {
    existing->value = value;
  } else {
    entity.essentials.push_back({name, value});
  }
}

ProtocolDocument EditToolset::set_essential(const ProtocolDocument& doc, std::string_view entity_id,
                                            std::string_view essential_name, const TypedValue& new_value) const {
  Located target = require_entity(doc, entity_id);
  ProtocolDocument out = doc;
  write_essential(entity_at(out.root, target.path), target.id_path, essential_name, new_value);
  return out;
}

EditResult EditToolset::add_entity_from_template(const ProtocolDocument& doc, std::string_view template_entity_id,
                                                 std::string_view parent_id,
                                                 const std::vector<EssentialOverride>& overrides,
                                                 const std::optional<std::string>& new_name) const {
  Located tmpl = require_entity(doc, template_entity_id);
  Located parent = require_entity(doc, parent_id);
  const Entity& source = entity_at(doc.root, tmpl.path);
  const Entity& parent_entity = entity_at(doc.root, parent.path);
  if (tmpl.path.empty()) {
    throw Error(ErrorCode::PlacementNotAllowed, "the protocol root cannot serve as a template", tmpl.id_path);
  }
  if (!rules_.placement_allowed(parent_entity.entity_type, source.entity_type)) {
    throw Error(ErrorCode::PlacementNotAllowed,
                source.entity_type + " may not be placed under " + parent_entity.entity_type, parent.id_path);
  }
  if (new_name && new_name->empty()) throw Error(ErrorCode::InvalidValue, "new_name must not be empty");

  EditResult result;
  Entity copy = source;
  std::vector<std::string> existing = collect_ids(doc.root);
  std::set<std::string> used(existing.begin(), existing.end());
  std::function<void(Entity&)> assign = [&](Entity& e) {
    const std::string original = e.id;
    for (std::size_t n = 1;; ++n) {
      std::string candidate = original + "-copy-" + std::to_string(n);
      if (used.insert(candidate).second) {
        e.id = candidate;
        break;
      }
    }
    result.side_effects.push_back({SideEffect::Kind::IdAssigned, e.id, original + " -> " + e.id});
    for (auto& child : e.children) assign(child);
  };
  assign(copy);
  if (new_name) copy.name = *new_name;
  const std::string copy_path = parent.id_path + "/" + copy.id;
  for (const auto& o : overrides) write_essential(copy, copy_path, o.essential_name, o.value);

  result.document = doc;
  entity_at(result.document.root, parent.path).children.push_back(std::move(copy));
  result.applied.push_back(AddEntity{std::string(template_entity_id), std::string(parent_id), overrides, new_name});
  return result;
}

EditResult EditToolset::delete_entity(const ProtocolDocument& doc, std::string_view entity_id) const {
  Located target = require_entity(doc, entity_id);
  if (target.path.empty()) throw Error(ErrorCode::CannotDeleteRoot, "the protocol root cannot be deleted", target.id_path);

  EditResult result;
  result.document = doc;
  Entity& root = result.document.root;
  remove_at(root, target.path);
  EntityPath current(target.path.begin(), target.path.end() - 1);
  while (!current.empty()) {
    const Entity& parent = entity_at(root, current);
    if (!rules_.is_compound(parent.entity_type) || !parent.children.empty()) break;
    result.side_effects.push_back({SideEffect::Kind::ParentRemoved, parent.id,
                                   parent.entity_type + " '" + parent.name + "' left without children"});
    remove_at(root, current);
    current.pop_back();
  }
  result.applied.push_back(DeleteEntity{std::string(entity_id)});
  return result;
}

EditResult EditToolset::apply(const ProtocolDocument& doc, const Action& action) const {
  if (const auto* set = std::get_if<SetEssential>(&action)) {
    EditResult r{set_essential(doc, set->entity_id, set->essential_name, set->new_value), {action}, {}};
    return r;
  }
  if (const auto* add = std::get_if<AddEntity>(&action)) {
    return add_entity_from_template(doc, add->template_entity_id, add->parent_id, add->overrides, add->new_name);
  }
  return delete_entity(doc, std::get<DeleteEntity>(action).entity_id);
}

ApplyOutcome EditToolset::apply_actions(const ProtocolDocument& doc, const std::vector<Action>& actions) const {
  ApplyOutcome outcome;
  EditResult working{doc, {}, {}};
  for (std::size_t i = 0; i < actions.size(); ++i) {
    try {
      EditResult step = apply(working.document, actions[i]);
      working.document = std::move(step.document);
      working.applied.push_back(actions[i]);
      for (auto& effect : step.side_effects) working.side_effects.push_back(std::move(effect));
    } catch (const Error& e) {
      outcome.result = EditResult{doc, {}, {}};
      outcome.failure = ActionFailure{i, Error(e.code(), "action " + std::to_string(i) + ": " + e.message(),
                                               e.where(), e.location())};
      return outcome;
    }
  }
  if (!actions.empty()) {
    auto report = validate_syntax(serialize_protocol(working.document));
    if (!report.ok) {
      outcome.result = EditResult{doc, {}, {}};
      outcome.failure = ActionFailure{actions.size(), Error(ErrorCode::SchemaError,
                                                            "edited document fails syntax validation: " +
                                                                report.issues.front().message)};
      return outcome;
    }
  }
  outcome.result = std::move(working);
  return outcome;
}

}  // namespace protoagent
