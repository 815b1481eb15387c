#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protoagent/agent/types.hpp"
#include "protoagent/error.hpp"
#include "protoagent/llm/embedding.hpp"

namespace protoagent {

/// Table columns: the three edit categories plus structured JSON requests.
enum class EvalColumn { Modification, Adding, Deleting, Json };

inline constexpr EvalColumn kEvalColumns[] = {EvalColumn::Modification, EvalColumn::Adding, EvalColumn::Deleting,
                                              EvalColumn::Json};

std::string_view to_string(EvalColumn column);
std::optional<EvalColumn> eval_column_from_string(std::string_view text);

struct RateBucket {
  std::size_t total = 0;
  std::size_t correct = 0;

  /// Undefined for an empty bucket.
  std::optional<double> rate() const;
  bool operator==(const RateBucket&) const = default;
};

struct ColumnRates {
  std::map<EvalColumn, RateBucket> buckets;  // always holds all four columns
  std::optional<double> macro;               // mean over defined buckets
  std::optional<double> micro;               // pooled over all outcomes
};

struct ColumnOutcome {
  EvalColumn column;
  bool ok;
};

ColumnRates compute_rates(const std::vector<ColumnOutcome>& outcomes);

/// Syntax correctness rate: `ok` is whether the modified protocol passed validate_syntax.
inline ColumnRates compute_scr(const std::vector<ColumnOutcome>& outcomes) { return compute_rates(outcomes); }

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;  // sample stddev (n-1) / sqrt(n); 0 for n = 1
  std::size_t n = 0;
};

MeanSem mean_sem(const std::vector<double>& values);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Throws EmptyGold. An empty retrieved set scores zero everywhere.
template <class T>
PrecisionRecall score_sets(const std::set<T>& gold, const std::set<T>& retrieved) {
  if (gold.empty()) throw Error(ErrorCode::EmptyGold, "gold set is empty");
  std::size_t hits = 0;
  for (const auto& item : retrieved) hits += gold.count(item);
  PrecisionRecall out;
  out.precision = retrieved.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(retrieved.size());
  out.recall = static_cast<double>(hits) / static_cast<double>(gold.size());
  // harmonic mean of P and R, in counts
  out.f1 = hits == 0 ? 0.0 : 2.0 * static_cast<double>(hits) / static_cast<double>(gold.size() + retrieved.size());
  return out;
}

using EssentialKey = std::pair<std::string, std::string>;  // (entity_id, essential name)

struct RetrievalGold {
  std::set<std::string> entity_ids;
  std::set<EssentialKey> essentials;
};

struct RetrievalScore {
  std::optional<PrecisionRecall> entity;     // absent when the entity gold set is empty
  std::optional<PrecisionRecall> essential;  // absent when the essential gold set is empty
};

/// Throws EmptyGold when both gold sets are empty.
RetrievalScore compute_retrieval_metrics(const RetrievalGold& gold, const RetrievedContext& retrieved);

}  // namespace protoagent
