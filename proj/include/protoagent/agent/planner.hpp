#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "protoagent/agent/memory.hpp"
#include "protoagent/agent/types.hpp"
#include "protoagent/edit/toolset.hpp"
#include "protoagent/llm/chat.hpp"

namespace protoagent {

struct PlannerOptions {
  ChatParams params;
  std::size_t max_steps = 12;
  std::size_t max_tree_chars = 200000;
};

std::string_view planner_prompt();
const std::vector<ToolSchema>& planner_tools();

class Planner {
 public:
  explicit Planner(const EditToolset& toolset, PlannerOptions options = {});

  /// Tool-calling loop for a natural-language sub-request. Unknown ids yield
  /// a Failed proposal with UnresolvedReference; a malformed final answer
  /// after one retry throws MalformedPlan.
  Proposal plan(const SubRequest& sub, const ProtocolDocument& doc, const MemoryContext& memory, ChatBackend& llm,
                std::string id) const;

  /// Deterministic planning of a structured sub-request; no LLM.
  Proposal plan_structured(const SubRequest& sub, const ProtocolDocument& doc, std::string id) const;

  /// Executes one planner tool against `doc`; errors become {"error": ...}.
  nlohmann::json run_tool(const ToolCall& call, const ProtocolDocument& doc, RetrievedContext* retrieved = nullptr,
                          std::size_t* widest_retrieval = nullptr) const;

 private:
  void finalize(Proposal& proposal, const ProtocolDocument& doc) const;

  const EditToolset* toolset_;
  PlannerOptions options_;
};

/// Requires Approved. Applies the actions atomically; on success the
/// proposal becomes Applied, otherwise Failed with the error attached and
/// the error rethrown.
EditResult execute(Proposal& proposal, const ProtocolDocument& doc, const EditToolset& toolset);

}  // namespace protoagent
