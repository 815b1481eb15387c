#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "protoagent/agent/memory.hpp"
#include "protoagent/agent/planner.hpp"
#include "protoagent/agent/router.hpp"
#include "protoagent/agent/types.hpp"
#include "protoagent/edit/toolset.hpp"
#include "protoagent/llm/chat.hpp"

namespace protoagent {

struct RequestInput {
  enum class Kind { Text, Json };
  Kind kind = Kind::Text;
  std::string body;

  static RequestInput text(std::string body) { return {Kind::Text, std::move(body)}; }
  static RequestInput json(std::string body) { return {Kind::Json, std::move(body)}; }
};

struct AgentOptions {
  ChatParams params;  // temperature / seed; stage is set per call
  std::size_t max_steps = 12;
  std::size_t max_tree_chars = 200000;
  DescriptionCatalog catalog = DescriptionCatalog::builtin();
};

/// Router → memory → planner pipeline. Proposals come back Pending (or
/// NotDispatchable / Failed); nothing is applied here.
class Agent {
 public:
  Agent(const EditToolset& toolset, ChatBackend& llm, AgentOptions options = {});

  std::vector<SubRequest> decompose(const RequestInput& input) const;

  /// Ids are "p<first_index>", "p<first_index+1>", ...
  std::vector<Proposal> propose(const ProtocolDocument& doc, const RequestInput& input,
                                std::size_t first_index = 1) const;

  std::vector<Proposal> plan_all(const ProtocolDocument& doc, const std::vector<SubRequest>& subs,
                                 std::size_t first_index = 1) const;

  EditResult execute(Proposal& proposal, const ProtocolDocument& doc) const;

  const EditToolset& toolset() const { return *toolset_; }

 private:
  const EditToolset* toolset_;
  ChatBackend* llm_;
  AgentOptions options_;
};

}  // namespace protoagent
