#include "protoagent/eval/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "protoagent/common/files.hpp"
#include "protoagent/edit/json_codec.hpp"
#include "protoagent/llm/scripted.hpp"
#include "protoagent/protocol/codec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace protoagent {
namespace {

Error invalid(const fs::path& where, const std::string& message) {
  return Error(ErrorCode::InvalidCase, message, where.string());
}

json read_json_file(const fs::path& path) {
  json j = json::parse(read_text_file(path.string()), nullptr, false);
  if (j.is_discarded()) throw invalid(path, "not valid JSON");
  return j;
}

EvalColumn column_of(const std::vector<Action>& actions, const fs::path& where) {
  std::optional<EvalColumn> column;
  for (const auto& a : actions) {
    EvalColumn c = std::holds_alternative<SetEssential>(a)  ? EvalColumn::Modification
                   : std::holds_alternative<AddEntity>(a) ? EvalColumn::Adding
                                                          : EvalColumn::Deleting;
    if (column && *column != c) throw invalid(where, "gold actions mix edit categories");
    column = c;
  }
  if (!column) throw invalid(where, "gold actions are empty");
  return *column;
}

RetrievalGold retrieval_gold_from_json(const json& j, const fs::path& where) {
  RetrievalGold gold;
  if (!j.is_object()) throw invalid(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "entity_ids" && key != "essentials") throw invalid(where, "unknown key '" + key + "'");
  }
  try {
    for (const auto& id : j.value("entity_ids", json::array())) gold.entity_ids.insert(id.get<std::string>());
    for (const auto& e : j.value("essentials", json::array())) {
      gold.essentials.insert({e.at("entity_id").get<std::string>(), e.at("name").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw invalid(where, e.what());
  }
  if (gold.entity_ids.empty() && gold.essentials.empty()) throw invalid(where, "gold retrieval is empty");
  return gold;
}

ProtocolDocument load_protocol(const fs::path& dir) {
  return parse_protocol(read_text_file((dir / "protocol.xml").string()));
}

std::vector<Action> load_gold_actions(const fs::path& dir) {
  const fs::path path = dir / "gold_actions.json";
  return actions_from_json(read_json_file(path));
}

std::string request_text(const EvalCase& c, const std::vector<Proposal>& proposals) {
  if (c.request.kind == RequestInput::Kind::Text) {
    std::string text = c.request.body;
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
  }
  std::string text;
  for (const auto& p : proposals) {
    if (!text.empty()) text += "\n";
    text += p.subrequest.text;
  }
  return text;
}

void record(CaseResult& r, std::string stage, const Error& e) {
  r.errors.push_back({std::move(stage), e.code(), e.message()});
}

std::optional<LevelSummary> summarize(const std::vector<PrecisionRecall>& scores) {
  if (scores.empty()) return std::nullopt;
  std::vector<double> p, r, f;
  for (const auto& s : scores) {
    p.push_back(s.precision);
    r.push_back(s.recall);
    f.push_back(s.f1);
  }
  return LevelSummary{mean_sem(p), mean_sem(r), mean_sem(f)};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const ColumnRates& rates) {
  json columns = json::object();
  for (const auto& [column, bucket] : rates.buckets) {
    columns[std::string(to_string(column))] = {
        {"total", bucket.total}, {"correct", bucket.correct}, {"rate", optional_number(bucket.rate())}};
  }
  return {{"columns", columns}, {"macro", optional_number(rates.macro)}, {"micro", optional_number(rates.micro)}};
}

json to_json(const MeanSem& m) { return {{"mean", m.mean}, {"sem", m.sem}, {"n", m.n}}; }

json to_json(const std::optional<LevelSummary>& s) {
  if (!s) return nullptr;
  return {{"precision", to_json(s->precision)}, {"recall", to_json(s->recall)}, {"f1", to_json(s->f1)}};
}

json to_json(const std::optional<PrecisionRecall>& s) {
  if (!s) return nullptr;
  return {{"precision", s->precision}, {"recall", s->recall}, {"f1", s->f1}};
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string cell(const RateBucket& b) {
  auto r = b.rate();
  return r ? fixed(*r) + " (" + std::to_string(b.correct) + "/" + std::to_string(b.total) + ")" : "n/a";
}

std::string cell(const std::optional<double>& v) { return v ? fixed(*v) : "n/a"; }

std::string cell(const MeanSem& m) { return fixed(m.mean) + " ± " + fixed(m.sem); }

}  // namespace

EvalCase load_case(const fs::path& dir) {
  EvalCase c;
  c.id = dir.filename().string();
  c.dir = dir;
  try {
    c.protocol = load_protocol(dir);
    const bool has_text = fs::exists(dir / "request.txt");
    const bool has_json = fs::exists(dir / "request.json");
    if (has_text == has_json) throw invalid(dir, "needs exactly one of request.txt and request.json");
    c.request = has_text ? RequestInput::text(read_text_file((dir / "request.txt").string()))
                         : RequestInput::json(read_text_file((dir / "request.json").string()));
    c.gold_actions = load_gold_actions(dir);
    c.column = has_json ? EvalColumn::Json : column_of(c.gold_actions, dir / "gold_actions.json");
    if (has_json && c.gold_actions.empty()) throw invalid(dir / "gold_actions.json", "gold actions are empty");

    const fs::path segments = dir / "gold_segments";
    if (!fs::is_directory(segments)) throw invalid(segments, "missing directory");
    for (const auto& entry : fs::directory_iterator(segments)) {
      if (entry.path().extension() != ".xml") continue;
      c.gold_segments.emplace(entry.path().stem().string(), read_text_file(entry.path().string()));
    }
    c.gold_retrieval = retrieval_gold_from_json(read_json_file(dir / "gold_retrieval.json"), dir / "gold_retrieval.json");
    if (fs::exists(dir / "script.json")) c.script = dir / "script.json";

    auto outcome = EditToolset().apply_actions(c.protocol, c.gold_actions);
    if (!outcome.ok()) throw invalid(dir / "gold_actions.json", "gold actions fail: " + outcome.failure->error.message());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidCase) throw;
    throw Error(ErrorCode::InvalidCase, std::string(to_string(e.code())) + ": " + e.message(),
                e.where().empty() ? dir.string() : e.where());
  }
  return c;
}

Segments write_gold_segments(const fs::path& dir) {
  ProtocolDocument doc;
  std::vector<Action> actions;
  try {
    doc = load_protocol(dir);
    actions = load_gold_actions(dir);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidCase) throw;
    throw Error(ErrorCode::InvalidCase, std::string(to_string(e.code())) + ": " + e.message(), dir.string());
  }
  Segments segments = replay_segments(doc, actions, EditToolset());
  const fs::path out = dir / "gold_segments";
  fs::create_directories(out);
  for (const auto& entry : fs::directory_iterator(out)) {
    if (entry.path().extension() == ".xml") fs::remove(entry.path());
  }
  for (const auto& [id, xml] : segments) write_file_atomic((out / (id + ".xml")).string(), xml);
  return segments;
}

PlanAccuracy compute_plan_accuracy(const std::vector<EvalCase>& cases, const std::vector<ProducedResult>& produced) {
  std::map<std::string, const ProducedResult*> by_id;
  for (const auto& p : produced) by_id[p.case_id] = &p;
  PlanAccuracy out;
  std::vector<ColumnOutcome> outcomes;
  for (const auto& c : cases) {
    auto it = by_id.find(c.id);
    bool exact = false;
    if (it == by_id.end() || !it->second->document) {
      out.missing.push_back(c.id);
    } else {
      exact = affected_segments(c.protocol, *it->second->document) == c.gold_segments;
    }
    out.exact[c.id] = exact;
    outcomes.push_back({c.column, exact});
  }
  out.rates = compute_rates(outcomes);
  return out;
}

CaseResult run_case(const EvalCase& c, const BenchmarkOptions& options) {
  CaseResult r;
  r.id = c.id;
  r.column = c.column;
  try {
    std::unique_ptr<ChatBackend> backend;
    if (options.llm.backend == "mock") {
      backend = std::make_unique<ScriptedBackend>(c.script ? load_script(c.script->string())
                                                           : std::vector<ScriptedExchange>{});
    } else {
      backend = make_chat_backend(options.llm);
    }
    auto embedder = make_embedder(options.llm);
    EditToolset tools;
    AgentOptions agent_options;
    agent_options.params = chat_params(options.llm, "");
    agent_options.max_tree_chars = options.llm.max_input_chars;
    Agent agent(tools, *backend, agent_options);

    try {
      r.proposals = agent.propose(c.protocol, c.request);
    } catch (const Error& e) {
      record(r, "plan", e);
      return r;
    }

    ProtocolDocument current = c.protocol;
    bool applied = false;
    for (auto& p : r.proposals) {
      if (p.status == ProposalStatus::Pending) {
        p.transition(ProposalStatus::Approved);
        try {
          current = agent.execute(p, current).document;
          applied = true;
        } catch (const Error& e) {
          record(r, "execute", e);
        }
      } else if (p.status == ProposalStatus::Failed && p.error) {
        record(r, "plan", Error(p.error->code, p.id + ": " + p.error->message, p.error->where));
      }
    }
    if (applied) r.document = current;
    r.syntax_ok = applied && r.errors.empty() && validate_syntax(serialize_protocol(current)).ok;

    RetrievedContext retrieved;
    for (const auto& p : r.proposals) {
      for (const auto& e : p.retrieved.entities) retrieved.add_entity(e);
      for (const auto& [id, name] : p.retrieved.essentials) retrieved.add_essential(id, name);
    }
    r.retrieval = compute_retrieval_metrics(c.gold_retrieval, retrieved);
    if (!retrieved.empty()) {
      try {
        r.faithfulness = compute_faithfulness(request_text(c, r.proposals), retrieved, c.protocol, *backend, *embedder,
                                              options.pseudo_tasks, c.id, chat_params(options.llm, "pseudo_tasks"));
      } catch (const Error& e) {
        record(r, "faithfulness", e);
      }
    }
  } catch (const Error& e) {
    record(r, "setup", e);
  }
  return r;
}

MetricsReport run_benchmark(const fs::path& case_dir, const BenchmarkOptions& options) {
  if (!fs::is_directory(case_dir)) {
    throw Error(ErrorCode::IoError, "case directory does not exist", case_dir.string());
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(case_dir)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  if (dirs.empty()) throw Error(ErrorCode::EmptyCaseSet, "no cases found", case_dir.string());
  std::sort(dirs.begin(), dirs.end());

  std::vector<std::optional<EvalCase>> cases(dirs.size());
  MetricsReport report;
  report.cases.resize(dirs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < dirs.size(); i = next++) {
      try {
        cases[i] = load_case(dirs[i]);
      } catch (const Error& e) {
        report.cases[i].id = dirs[i].filename().string();
        record(report.cases[i], "load", e);
        continue;
      }
      report.cases[i] = run_case(*cases[i], options);
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, dirs.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::vector<EvalCase> loaded;
  std::vector<ProducedResult> produced;
  std::vector<ColumnOutcome> scr;
  std::vector<double> faithfulness;
  std::vector<PrecisionRecall> entity, essential;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    CaseResult& r = report.cases[i];
    if (!cases[i]) continue;
    loaded.push_back(std::move(*cases[i]));
    if (r.document) produced.push_back({r.id, r.document});
    scr.push_back({*r.column, r.syntax_ok});
    if (r.faithfulness) faithfulness.push_back(r.faithfulness->score.mean);
    if (r.retrieval && r.retrieval->entity) entity.push_back(*r.retrieval->entity);
    if (r.retrieval && r.retrieval->essential) essential.push_back(*r.retrieval->essential);
  }
  PlanAccuracy accuracy = compute_plan_accuracy(loaded, produced);
  for (auto& r : report.cases) {
    auto it = accuracy.exact.find(r.id);
    r.plan_exact = it != accuracy.exact.end() && it->second;
  }
  report.scr = compute_scr(scr);
  report.plan_accuracy = accuracy.rates;
  if (!faithfulness.empty()) report.faithfulness = mean_sem(faithfulness);
  report.entity_retrieval = summarize(entity);
  report.essential_retrieval = summarize(essential);
  return report;
}

json to_json(const MetricsReport& report) {
  json cases = json::array();
  std::size_t failed = 0;
  for (const auto& r : report.cases) {
    if (r.failed()) ++failed;
    json c{{"id", r.id},
           {"column", r.column ? json(std::string(to_string(*r.column))) : json(nullptr)},
           {"status", r.failed() ? "failed" : "ok"},
           {"syntax_ok", r.syntax_ok},
           {"plan_exact", r.plan_exact}};
    json errors = json::array();
    for (const auto& e : r.errors) {
      errors.push_back({{"stage", e.stage}, {"code", std::string(to_string(e.code))}, {"message", e.message}});
    }
    c["errors"] = errors;
    json proposals = json::array();
    for (const auto& p : r.proposals) {
      proposals.push_back({{"id", p.id},
                           {"category", std::string(to_string(p.subrequest.category))},
                           {"status", std::string(to_string(p.status))},
                           {"actions", actions_to_json(p.actions)}});
    }
    c["proposals"] = proposals;
    c["retrieval"] = r.retrieval ? json{{"entity", to_json(r.retrieval->entity)},
                                        {"essential", to_json(r.retrieval->essential)}}
                                 : json(nullptr);
    if (r.faithfulness) {
      json tasks = json::array();
      for (const auto& t : r.faithfulness->tasks) tasks.push_back(t.text);
      c["faithfulness"] = to_json(r.faithfulness->score);
      c["faithfulness"]["similarities"] = r.faithfulness->similarities;
      c["faithfulness"]["pseudo_tasks"] = tasks;
    } else {
      c["faithfulness"] = nullptr;
    }
    cases.push_back(std::move(c));
  }
  return {{"cases", cases},
          {"scr", to_json(report.scr)},
          {"plan_accuracy", to_json(report.plan_accuracy)},
          {"faithfulness", report.faithfulness ? to_json(*report.faithfulness) : json(nullptr)},
          {"retrieval", {{"entity", to_json(report.entity_retrieval)}, {"essential", to_json(report.essential_retrieval)}}},
          {"counts", {{"cases", report.cases.size()}, {"failed", failed}}}};
}

std::string render_markdown(const MetricsReport& report) {
  std::string md = "# Benchmark report\n\n";
  md += "| Metric | Modification | Adding | Deleting | JSON | General (macro) | General (micro) |\n";
  md += "|---|---|---|---|---|---|---|\n";
  auto row = [&](const std::string& name, const ColumnRates& rates) {
    md += "| " + name;
    for (auto column : kEvalColumns) md += " | " + cell(rates.buckets.at(column));
    md += " | " + cell(rates.macro) + " | " + cell(rates.micro) + " |\n";
  };
  row("SCR", report.scr);
  row("Plan accuracy", report.plan_accuracy);

  md += "\n## Plan faithfulness\n\n";
  md += report.faithfulness ? "Mean cosine similarity " + cell(*report.faithfulness) + " (SEM) over " +
                                  std::to_string(report.faithfulness->n) + " cases.\n"
                            : std::string("Not available.\n");

  md += "\n## Retrieval\n\n| Level | Precision | Recall | F1 | Cases |\n|---|---|---|---|---|\n";
  auto level = [&](const std::string& name, const std::optional<LevelSummary>& s) {
    if (!s) {
      md += "| " + name + " | n/a | n/a | n/a | 0 |\n";
      return;
    }
    md += "| " + name + " | " + cell(s->precision) + " | " + cell(s->recall) + " | " + cell(s->f1) + " | " +
          std::to_string(s->f1.n) + " |\n";
  };
  level("Entity", report.entity_retrieval);
  level("Essential", report.essential_retrieval);

  md += "\n## Cases\n\n| Case | Column | Syntax | Exact | Faithfulness | Status |\n|---|---|---|---|---|---|\n";
  for (const auto& r : report.cases) {
    std::string status = "ok";
    if (r.failed()) status = r.errors.front().stage + ": " + std::string(to_string(r.errors.front().code));
    md += "| " + r.id + " | " + (r.column ? std::string(to_string(*r.column)) : "-") + " | " +
          (r.syntax_ok ? "yes" : "no") + " | " + (r.plan_exact ? "yes" : "no") + " | " +
          (r.faithfulness ? cell(r.faithfulness->score) : "n/a") + " | " + status + " |\n";
  }
  return md;
}

void write_report(const MetricsReport& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_file_atomic((out_dir / "report.json").string(), to_json(report).dump(2) + "\n");
  write_file_atomic((out_dir / "report.md").string(), render_markdown(report));
}

}  // namespace protoagent
