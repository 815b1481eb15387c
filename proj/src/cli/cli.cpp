#include "protoagent/cli/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "protoagent/agent/agent.hpp"
#include "protoagent/common/files.hpp"
#include "protoagent/edit/json_codec.hpp"
#include "protoagent/eval/benchmark.hpp"
#include "protoagent/llm/config.hpp"
#include "protoagent/protocol/codec.hpp"
#include "protoagent/protocol/simplified_tree.hpp"
#include "protoagent/service/http_service.hpp"

using nlohmann::json;

namespace protoagent {
namespace {

struct Globals {
  std::string config_path;
  std::string llm;
  bool strict = false;
  bool json = false;
};

bool is_backend_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendError:
    case ErrorCode::RateLimited:
    case ErrorCode::ScriptMiss:
    case ErrorCode::SchemaViolation:
    case ErrorCode::MalformedRouterOutput:
    case ErrorCode::MalformedOutput:
      return true;
    default:
      return false;
  }
}

int report_error(const Error& e, std::ostream& err) {
  err << "error: " << to_string(e.code()) << ": " << e.message();
  if (!e.where().empty()) err << " (" << e.where() << ")";
  err << "\n";
  return is_backend_error(e.code()) ? kExitBackend : kExitInput;
}

LlmConfig load_config(const Globals& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("PROTOAGENT_CONFIG")) path = env;
  }
  LlmConfig config = path.empty() ? LlmConfig{} : LlmConfig::load(path);
  if (!g.llm.empty()) config.backend = g.llm;
  return config;
}

AgentOptions agent_options(const LlmConfig& config) {
  AgentOptions options;
  options.params = chat_params(config, "");
  options.max_tree_chars = config.max_input_chars;
  return options;
}

ProtocolDocument load_protocol(const std::string& path, const Globals& g) {
  ParseOptions options;
  options.strict = g.strict;
  return parse_protocol(read_text_file(path), options);
}

void print_report(const ValidationReport& report, std::ostream& out) {
  for (const auto& issue : report.issues) {
    out << (issue.severity == Severity::Error ? "error" : "warning") << " " << issue.code;
    if (!issue.path.empty()) out << " at " << issue.path;
    if (issue.location) out << " (line " << issue.location->line << ", column " << issue.location->column << ")";
    out << ": " << issue.message << "\n";
  }
  out << (report.ok ? "ok" : "invalid") << ": " << report.error_count() << " error(s), "
      << report.issues.size() - report.error_count() << " warning(s)\n";
}

void print_proposal(const Proposal& p, std::ostream& out) {
  out << "[" << p.id << "] " << to_string(p.subrequest.category) << ": " << p.subrequest.text << "\n";
  if (!p.plan_text.empty()) out << p.plan_text << "\n";
  for (std::size_t i = 0; i < p.actions.size(); ++i) out << "  " << i + 1 << ". " << describe(p.actions[i]) << "\n";
  if (p.low_confidence) out << "  (low confidence: several entities matched)\n";
  for (const auto& w : p.warnings) out << "  warning: " << w << "\n";
  if (p.error) out << "  error: " << to_string(p.error->code) << ": " << p.error->message << "\n";
}

int cmd_validate(const Globals& g, const std::string& path, const std::string& rules_path, std::ostream& out,
                 std::ostream& err) {
  std::string xml;
  RuleSet rules = RuleSet::builtin();
  try {
    xml = read_text_file(path);
    if (!rules_path.empty()) rules = RuleSet::from_json(read_text_file(rules_path));
  } catch (const Error& e) {
    return report_error(e, err);
  }
  ParseOptions options;
  options.strict = g.strict;
  ValidationReport report = validate_syntax(xml, options);
  if (report.ok) report.merge(validate_structure(parse_protocol(xml, options), rules));
  if (g.json) {
    out << to_json(report).dump(2) << "\n";
  } else {
    print_report(report, out);
  }
  return report.ok ? kExitOk : kExitFailure;
}

int cmd_tree(const Globals& g, const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    auto tree = render_simplified_tree(load_protocol(path, g));
    if (g.json) {
      out << json(tree.lines).dump(2) << "\n";
    } else {
      out << tree.text();
    }
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

struct ApplyArgs {
  std::string protocol;
  std::string request;
  std::string request_json;
  std::string script;
  std::string out;
  bool yes = false;
  bool interactive = false;
};

int cmd_apply(const Globals& g, const ApplyArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  ProtocolDocument doc;
  RequestInput input;
  LlmConfig config;
  try {
    doc = load_protocol(a.protocol, g);
    input = a.request_json.empty() ? RequestInput::text(a.request) : RequestInput::json(read_text_file(a.request_json));
    config = load_config(g);
    if (!a.script.empty()) {
      config.backend = "mock";
      config.script = a.script;
    }
  } catch (const Error& e) {
    return report_error(e, err);
  }

  EditToolset tools;
  std::vector<Proposal> proposals;
  ProtocolDocument current = doc;
  bool failed = false;
  std::size_t applied = 0;
  try {
    auto llm = make_chat_backend(config);
    Agent agent(tools, *llm, agent_options(config));
    proposals = agent.propose(doc, input);
    for (auto& p : proposals) {
      if (!g.json) print_proposal(p, out);
      if (p.status == ProposalStatus::Failed) {
        failed = true;
        continue;
      }
      if (p.status != ProposalStatus::Pending) continue;
      bool approve = a.yes;
      if (!approve) {
        out << "Approve " << p.id << "? [y/N] " << std::flush;
        std::string answer;
        std::getline(in, answer);
        approve = answer == "y" || answer == "Y" || answer == "yes";
      }
      if (!approve) {
        p.transition(ProposalStatus::Rejected);
        failed = true;
        if (!g.json) out << p.id << " rejected\n";
        continue;
      }
      p.transition(ProposalStatus::Approved);
      try {
        current = agent.execute(p, current).document;
        ++applied;
        if (!g.json) out << p.id << " applied\n";
      } catch (const Error& e) {
        failed = true;
        if (!g.json) out << p.id << " failed: " << to_string(e.code()) << ": " << e.message() << "\n";
      }
    }
  } catch (const Error& e) {
    return report_error(e, err);
  }

  const bool ok = !failed && applied > 0;
  if (ok) {
    try {
      write_file_atomic(a.out, serialize_protocol(current));
    } catch (const Error& e) {
      return report_error(e, err);
    }
  }
  if (g.json) {
    json j{{"proposals", to_json(proposals)}, {"written", ok}};
    if (ok) j["out"] = a.out;
    out << j.dump(2) << "\n";
  } else if (ok) {
    out << "wrote " << a.out << "\n";
  } else {
    out << "nothing written\n";
  }
  return ok ? kExitOk : kExitFailure;
}

struct EvalArgs {
  std::string cases;
  std::string out;
  std::size_t jobs = 1;
  std::size_t pseudo_tasks = kDefaultPseudoTasks;
};

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out, std::ostream& err) {
  try {
    BenchmarkOptions options;
    options.llm = load_config(g);
    options.jobs = a.jobs;
    options.pseudo_tasks = a.pseudo_tasks;
    MetricsReport report = run_benchmark(a.cases, options);
    write_report(report, a.out);
    if (g.json) {
      out << to_json(report).dump(2) << "\n";
    } else {
      out << render_markdown(report);
    }
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int cmd_case_gold(const std::vector<std::string>& dirs, std::ostream& out, std::ostream& err) {
  for (const auto& d : dirs) {
    try {
      Segments segments = write_gold_segments(d);
      out << d << ":";
      for (const auto& [id, xml] : segments) out << " " << id;
      out << "\n";
    } catch (const Error& e) {
      return report_error(e, err);
    }
  }
  return kExitOk;
}

HttpService* g_running = nullptr;

extern "C" void stop_on_signal(int) {
  if (g_running) g_running->stop();
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store_dir = "sessions";
  std::string cors_origin = "*";
};

int cmd_serve(const Globals& g, const ServeArgs& a, std::ostream& out, std::ostream& err) {
  LlmConfig config;
  std::unique_ptr<SessionService> sessions;
  try {
    config = load_config(g);
    SessionServiceOptions options;
    options.store_dir = a.store_dir;
    options.agent = agent_options(config);
    options.backend = backend_factory_from_config(config);
    sessions = std::make_unique<SessionService>(std::move(options));
  } catch (const Error& e) {
    return report_error(e, err);
  }
  HttpService http(*sessions, HttpServiceOptions{a.cors_origin});
  int port = a.port;
  if (port == 0) {
    port = http.bind_any(a.host);
  } else if (!http.bind(a.host, port)) {
    port = -1;
  }
  if (port < 0) {
    err << "error: cannot bind " << a.host << ":" << a.port << "\n";
    return kExitBind;
  }
  err << "store " << a.store_dir << ", llm backend " << config.backend;
  if (!config.chat.model.empty()) err << " (" << config.chat.model << ")";
  err << "\n";
  out << "listening on http://" << a.host << ":" << port << "\n" << std::flush;
  g_running = &http;
  auto previous_int = std::signal(SIGINT, stop_on_signal);
  auto previous_term = std::signal(SIGTERM, stop_on_signal);
  http.listen_after_bind();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  g_running = nullptr;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Request-driven editing and evaluation of CT scan protocols", "protoagent"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "LLM configuration file (default: $PROTOAGENT_CONFIG)");
  app.add_option("--llm", g.llm, "Override the configured backend")->check(CLI::IsMember({"mock", "http"}));
  app.add_flag("--strict", g.strict, "Unknown entity types are errors");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.fallthrough();

  std::string validate_path, rules_path;
  auto* validate = app.add_subcommand("validate", "Check a protocol file");
  validate->add_option("protocol", validate_path)->required();
  validate->add_option("--rules", rules_path, "Rule set JSON");

  std::string tree_path;
  auto* tree = app.add_subcommand("tree", "Print the simplified entity tree");
  tree->add_option("protocol", tree_path)->required();

  ApplyArgs apply_args;
  auto* apply = app.add_subcommand("apply", "Plan and apply one request");
  apply->add_option("protocol", apply_args.protocol)->required();
  auto* request = apply->add_option("--request", apply_args.request, "Request text");
  auto* request_json = apply->add_option("--request-json", apply_args.request_json, "Structured request file");
  request->excludes(request_json);
  apply->add_option("--script", apply_args.script, "Scripted backend replies (implies --llm mock)");
  apply->add_option("--out", apply_args.out, "Output protocol file")->required();
  auto* yes = apply->add_flag("--yes", apply_args.yes, "Approve every proposal");
  auto* interactive = apply->add_flag("--interactive", apply_args.interactive, "Ask before each proposal (default)");
  yes->excludes(interactive);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Run the benchmark over a case directory");
  eval->add_option("--cases", eval_args.cases)->required();
  eval->add_option("--out", eval_args.out)->required();
  eval->add_option("--jobs", eval_args.jobs)->check(CLI::PositiveNumber);
  eval->add_option("--pseudo-tasks", eval_args.pseudo_tasks)->check(CLI::PositiveNumber);

  std::vector<std::string> gold_dirs;
  auto* gold = app.add_subcommand("case-gold", "Regenerate gold_segments/ from gold_actions.json");
  gold->add_option("case_dir", gold_dirs)->required();

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the REST service");
  serve->add_option("--host", serve_args.host);
  serve->add_option("--port", serve_args.port, "0 picks a free port")->check(CLI::Range(0, 65535));
  serve->add_option("--store-dir", serve_args.store_dir);
  serve->add_option("--cors-origin", serve_args.cors_origin);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (apply->parsed() && apply_args.request.empty() == apply_args.request_json.empty()) {
      throw CLI::ValidationError("apply needs exactly one of --request and --request-json");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (validate->parsed()) return cmd_validate(g, validate_path, rules_path, out, err);
  if (tree->parsed()) return cmd_tree(g, tree_path, out, err);
  if (apply->parsed()) return cmd_apply(g, apply_args, in, out, err);
  if (eval->parsed()) return cmd_eval(g, eval_args, out, err);
  if (gold->parsed()) return cmd_case_gold(gold_dirs, out, err);
  return cmd_serve(g, serve_args, out, err);
}

}  // namespace protoagent
