#include "protoagent/eval/segments.hpp"

#include <unordered_map>

#include "protoagent/protocol/codec.hpp"

namespace protoagent {
namespace {

struct Snapshot {
  std::string own;  // entity without children
  std::vector<std::string> child_ids;
};

std::unordered_map<std::string, Snapshot> snapshot(const Entity& root) {
  std::unordered_map<std::string, Snapshot> out;
  visit_preorder(root, [&](const Entity& e, const Entity*, std::size_t) {
    Snapshot s{serialize_entity(e, false), {}};
    for (const auto& child : e.children) s.child_ids.push_back(child.id);
    out.emplace(e.id, std::move(s));
  });
  return out;
}

void collect(const Entity& e, const std::unordered_map<std::string, Snapshot>& before, Segments& out) {
  auto it = before.find(e.id);
  bool changed = it == before.end() || it->second.own != serialize_entity(e, false) ||
                 it->second.child_ids.size() != e.children.size();
  if (!changed) {
    for (std::size_t i = 0; i < e.children.size(); ++i) {
      if (it->second.child_ids[i] != e.children[i].id) {
        changed = true;
        break;
      }
    }
  }
  if (changed) {
    out.emplace(e.id, serialize_entity(e, true));
    return;
  }
  for (const auto& child : e.children) collect(child, before, out);
}

}  // namespace

Segments affected_segments(const ProtocolDocument& before, const ProtocolDocument& after) {
  Segments out;
  collect(after.root, snapshot(before.root), out);
  return out;
}

Segments replay_segments(const ProtocolDocument& doc, const std::vector<Action>& actions, const EditToolset& toolset) {
  auto outcome = toolset.apply_actions(doc, actions);
  if (!outcome.ok()) throw outcome.failure->error;
  return affected_segments(doc, outcome.result.document);
}

}  // namespace protoagent
