#pragma once

#include <map>
#include <string>
#include <vector>

#include "protoagent/edit/toolset.hpp"
#include "protoagent/protocol/document.hpp"

namespace protoagent {

/// Entity id -> canonical XML of an affected subtree.
using Segments = std::map<std::string, std::string>;

/// An entity of `after` changed when it is new, its own content differs, or
/// its child id list differs. The segments are the outermost changed
/// entities, serialized with their children.
Segments affected_segments(const ProtocolDocument& before, const ProtocolDocument& after);

/// Segments produced by replaying `actions` on `doc`. Throws the failing
/// action's error.
Segments replay_segments(const ProtocolDocument& doc, const std::vector<Action>& actions, const EditToolset& toolset);

}  // namespace protoagent
