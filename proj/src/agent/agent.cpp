#include "protoagent/agent/agent.hpp"

namespace protoagent {

Agent::Agent(const EditToolset& toolset, ChatBackend& llm, AgentOptions options)
    : toolset_(&toolset), llm_(&llm), options_(std::move(options)) {}

std::vector<SubRequest> Agent::decompose(const RequestInput& input) const {
  if (input.kind == RequestInput::Kind::Json) return parse_structured_request(input.body);
  return route(input.body, *llm_, options_.params);
}

std::vector<Proposal> Agent::plan_all(const ProtocolDocument& doc, const std::vector<SubRequest>& subs,
                                      std::size_t first_index) const {
  Planner planner(*toolset_, PlannerOptions{options_.params, options_.max_steps, options_.max_tree_chars});
  std::optional<MemoryContext> memory;
  std::vector<Proposal> out;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const SubRequest& sub = subs[i];
    std::string id = "p" + std::to_string(first_index + i);
    if (!sub.dispatchable()) {
      Proposal p;
      p.id = std::move(id);
      p.subrequest = sub;
      p.status = ProposalStatus::NotDispatchable;
      p.plan_text = "Not dispatched: this sub-request does not edit the protocol" +
                    (sub.rationale.empty() ? std::string(".") : " (" + sub.rationale + ").");
      out.push_back(std::move(p));
      continue;
    }
    if (sub.structured) {
      out.push_back(planner.plan_structured(sub, doc, std::move(id)));
      continue;
    }
    if (!memory) memory = build_memory(doc, options_.catalog);
    try {
      out.push_back(planner.plan(sub, doc, *memory, *llm_, id));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MalformedPlan && e.code() != ErrorCode::SchemaViolation) throw;
      Proposal p;
      p.id = std::move(id);
      p.subrequest = sub;
      p.status = ProposalStatus::Failed;
      p.error = ProposalError::from(e);
      p.plan_text = "Planning failed: " + e.message();
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<Proposal> Agent::propose(const ProtocolDocument& doc, const RequestInput& input,
                                     std::size_t first_index) const {
  return plan_all(doc, decompose(input), first_index);
}

EditResult Agent::execute(Proposal& proposal, const ProtocolDocument& doc) const {
  return protoagent::execute(proposal, doc, *toolset_);
}

}  // namespace protoagent
