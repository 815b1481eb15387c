#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "protoagent/agent/memory.hpp"
#include "protoagent/agent/types.hpp"
#include "protoagent/eval/metrics.hpp"
#include "protoagent/llm/chat.hpp"
#include "protoagent/llm/embedding.hpp"

namespace protoagent {

struct PseudoTask {
  std::string text;
  std::string source_case_id;

  bool operator==(const PseudoTask&) const = default;
};

std::string pseudo_task_prompt(std::size_t n);

/// The retrieved entities and essentials as canonical XML plus the type
/// descriptions. This is the only case-specific text the generator sees.
std::string pseudo_task_context(const RetrievedContext& retrieved, const ProtocolDocument& doc,
                                const DescriptionCatalog& catalog = DescriptionCatalog::builtin());

/// Exactly `n` tasks; extra answers are dropped. One corrective retry, then MalformedOutput.
std::vector<PseudoTask> generate_pseudo_tasks(const RetrievedContext& retrieved, const ProtocolDocument& doc,
                                              ChatBackend& llm, std::size_t n, const std::string& source_case_id = "",
                                              ChatParams params = {},
                                              const DescriptionCatalog& catalog = DescriptionCatalog::builtin());

struct Faithfulness {
  MeanSem score;
  std::vector<PseudoTask> tasks;
  std::vector<double> similarities;
};

inline constexpr std::size_t kDefaultPseudoTasks = 10;

Faithfulness faithfulness_of(std::string_view request_text, const std::vector<PseudoTask>& tasks, Embedder& embedder);

Faithfulness compute_faithfulness(std::string_view request_text, const RetrievedContext& retrieved,
                                  const ProtocolDocument& doc, ChatBackend& llm, Embedder& embedder,
                                  std::size_t n = kDefaultPseudoTasks, const std::string& source_case_id = "",
                                  ChatParams params = {});

}  // namespace protoagent
