#include "protoagent/eval/metrics.hpp"

#include <cmath>

namespace protoagent {

std::string_view to_string(EvalColumn column) {
  switch (column) {
    case EvalColumn::Modification: return "Modification";
    case EvalColumn::Adding: return "Adding";
    case EvalColumn::Deleting: return "Deleting";
    case EvalColumn::Json: return "JSON";
  }
  return "?";
}

std::optional<EvalColumn> eval_column_from_string(std::string_view text) {
  for (auto column : kEvalColumns) {
    if (to_string(column) == text) return column;
  }
  return std::nullopt;
}

std::optional<double> RateBucket::rate() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

ColumnRates compute_rates(const std::vector<ColumnOutcome>& outcomes) {
  ColumnRates out;
  for (auto column : kEvalColumns) out.buckets[column];
  std::size_t correct = 0;
  for (const auto& o : outcomes) {
    auto& bucket = out.buckets[o.column];
    ++bucket.total;
    if (o.ok) {
      ++bucket.correct;
      ++correct;
    }
  }
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& [column, bucket] : out.buckets) {
    if (auto r = bucket.rate()) {
      sum += *r;
      ++defined;
    }
  }
  if (defined > 0) out.macro = sum / static_cast<double>(defined);
  if (!outcomes.empty()) out.micro = static_cast<double>(correct) / static_cast<double>(outcomes.size());
  return out;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vectors have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " components");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (!a.model_id.empty() && !b.model_id.empty() && a.model_id != b.model_id) {
    throw Error(ErrorCode::PreconditionFailed, "embeddings come from " + a.model_id + " and " + b.model_id);
  }
  return cosine_similarity(a.values, b.values);
}

MeanSem mean_sem(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::PreconditionFailed, "mean of an empty sample");
  MeanSem out;
  out.n = values.size();
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(out.n);
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sem = std::sqrt(ss / static_cast<double>(out.n - 1)) / std::sqrt(static_cast<double>(out.n));
  }
  return out;
}

RetrievalScore compute_retrieval_metrics(const RetrievalGold& gold, const RetrievedContext& retrieved) {
  if (gold.entity_ids.empty() && gold.essentials.empty()) {
    throw Error(ErrorCode::EmptyGold, "gold retrieval has neither entities nor essentials");
  }
  RetrievalScore out;
  if (!gold.entity_ids.empty()) {
    std::set<std::string> ids;
    for (const auto& e : retrieved.entities) ids.insert(e.id);
    out.entity = score_sets(gold.entity_ids, ids);
  }
  if (!gold.essentials.empty()) {
    std::set<EssentialKey> keys(retrieved.essentials.begin(), retrieved.essentials.end());
    out.essential = score_sets(gold.essentials, keys);
  }
  return out;
}

}  // namespace protoagent
