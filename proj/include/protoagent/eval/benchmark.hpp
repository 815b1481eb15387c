#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoagent/agent/agent.hpp"
#include "protoagent/eval/metrics.hpp"
#include "protoagent/eval/pseudo_tasks.hpp"
#include "protoagent/eval/segments.hpp"
#include "protoagent/llm/config.hpp"

namespace protoagent {

/// One gold-labeled case directory:
///   protocol.xml, request.txt | request.json, gold_actions.json,
///   gold_segments/<entity id>.xml, gold_retrieval.json, script.json (optional)
struct EvalCase {
  std::string id;
  std::filesystem::path dir;
  ProtocolDocument protocol;
  RequestInput request;
  EvalColumn column = EvalColumn::Modification;
  std::vector<Action> gold_actions;
  Segments gold_segments;
  RetrievalGold gold_retrieval;
  std::optional<std::filesystem::path> script;
};

/// Throws InvalidCase. Text requests take their column from the gold actions.
EvalCase load_case(const std::filesystem::path& dir);

/// Replays gold_actions.json and rewrites gold_segments/. Returns the segments.
Segments write_gold_segments(const std::filesystem::path& dir);

struct ProducedResult {
  std::string case_id;
  std::optional<ProtocolDocument> document;  // absent when nothing was applied
};

struct PlanAccuracy {
  ColumnRates rates;
  std::map<std::string, bool> exact;  // by case id
  std::vector<std::string> missing;   // cases without a produced document
};

PlanAccuracy compute_plan_accuracy(const std::vector<EvalCase>& cases, const std::vector<ProducedResult>& produced);

struct BenchmarkOptions {
  LlmConfig llm;
  std::size_t pseudo_tasks = kDefaultPseudoTasks;
  std::size_t jobs = 1;
};

struct CaseError {
  std::string stage;
  ErrorCode code;
  std::string message;
};

struct CaseResult {
  std::string id;
  std::optional<EvalColumn> column;
  std::vector<CaseError> errors;
  std::vector<Proposal> proposals;
  std::optional<ProtocolDocument> document;
  bool syntax_ok = false;
  bool plan_exact = false;
  std::optional<RetrievalScore> retrieval;
  std::optional<Faithfulness> faithfulness;

  bool failed() const { return !errors.empty(); }
};

struct LevelSummary {
  MeanSem precision;
  MeanSem recall;
  MeanSem f1;
};

struct MetricsReport {
  std::vector<CaseResult> cases;  // sorted by id
  ColumnRates scr;
  ColumnRates plan_accuracy;
  std::optional<MeanSem> faithfulness;  // over per-case means
  std::optional<LevelSummary> entity_retrieval;
  std::optional<LevelSummary> essential_retrieval;
};

/// Route, plan, auto-approve, execute and score one case. Never throws.
CaseResult run_case(const EvalCase& eval_case, const BenchmarkOptions& options);

/// Throws EmptyCaseSet or IoError; per-case problems are recorded in the report.
MetricsReport run_benchmark(const std::filesystem::path& case_dir, const BenchmarkOptions& options);

nlohmann::json to_json(const MetricsReport& report);
std::string render_markdown(const MetricsReport& report);

/// Writes report.json and report.md into `out_dir`.
void write_report(const MetricsReport& report, const std::filesystem::path& out_dir);

}  // namespace protoagent
