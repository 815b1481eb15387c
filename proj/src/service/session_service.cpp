#include "protoagent/service/session_service.hpp"

#include "protoagent/common/digest.hpp"
#include "protoagent/llm/scripted.hpp"
#include "protoagent/protocol/codec.hpp"

using nlohmann::json;

namespace protoagent {

struct SessionService::Slot {
  std::mutex busy;   // held for the whole of a mutation
  std::mutex state;  // guards `session` and `llm`
  std::optional<SessionState> session;
  std::unique_ptr<ChatBackend> llm;
};

namespace {

std::string first_problem(const ValidationReport& report) {
  return report.issues.empty() ? std::string("invalid protocol") : report.issues.front().message;
}

class BusyGuard {
 public:
  explicit BusyGuard(std::mutex& m, const std::string& id) : lock_(m, std::try_to_lock) {
    if (!lock_.owns_lock()) throw Error(ErrorCode::Busy, "a request is already being processed for session " + id, id);
  }

 private:
  std::unique_lock<std::mutex> lock_;
};

}  // namespace

InvalidUpload::InvalidUpload(ValidationReport report)
    : Error(ErrorCode::SyntaxError, first_problem(report)),
      report_(std::move(report)) {}

BackendFactory backend_factory_from_config(const LlmConfig& config) {
  return [config](const std::string&) { return make_chat_backend(config); };
}

SessionService::SessionService(SessionServiceOptions options)
    : options_(std::move(options)), store_(options_.store_dir, toolset_) {
  if (!options_.backend) {
    options_.backend = [](const std::string&) { return std::make_unique<ScriptedBackend>(std::vector<ScriptedExchange>{}); };
  }
}

SessionService::~SessionService() = default;

SessionService::Slot& SessionService::slot(const std::string& id) {
  std::lock_guard<std::mutex> lock(slots_mutex_);
  auto it = slots_.find(id);
  if (it != slots_.end()) return *it->second;
  if (!store_.exists(id)) throw Error(ErrorCode::NotFound, "no session " + id, id);
  auto s = std::make_unique<Slot>();
  s->session = store_.load(id);
  return *slots_.emplace(id, std::move(s)).first->second;
}

ChatBackend& SessionService::backend(Slot& s, const std::string& id) {
  if (!s.llm) s.llm = options_.backend(id);
  return *s.llm;
}

SessionSummary SessionService::create_session(std::string_view protocol_xml) {
  ValidationReport report = validate_syntax(protocol_xml);
  if (!report.ok) throw InvalidUpload(std::move(report));
  SessionState state = store_.create(parse_protocol(protocol_xml));
  const std::string id = state.id;
  auto s = std::make_unique<Slot>();
  s->session = std::move(state);
  {
    std::lock_guard<std::mutex> lock(slots_mutex_);
    slots_.emplace(id, std::move(s));
  }
  return summary(id);
}

SessionSummary SessionService::summary(const std::string& id) {
  Slot& s = slot(id);
  std::lock_guard<std::mutex> lock(s.state);
  const SessionState& st = *s.session;
  return {st.id, st.created_at, protocol_hash(st.protocol), render_simplified_tree(st.protocol), st.proposals.size()};
}

std::vector<Proposal> SessionService::submit_request(const std::string& id, const RequestInput& input) {
  Slot& s = slot(id);
  BusyGuard busy(s.busy, id);
  ProtocolDocument doc;
  std::size_t first_index = 0;
  ChatBackend* llm = nullptr;
  {
    std::lock_guard<std::mutex> lock(s.state);
    doc = s.session->protocol;
    first_index = s.session->proposals.size() + 1;
    llm = &backend(s, id);
  }
  // Structured requests are validated before anything is recorded.
  if (input.kind == RequestInput::Kind::Json) parse_structured_request(input.body);

  {
    std::lock_guard<std::mutex> lock(s.state);
    store_.append(*s.session, HistoryEventKind::RequestSubmitted,
                  {{"kind", input.kind == RequestInput::Kind::Json ? "json" : "text"}, {"body", input.body}});
  }
  Agent agent(toolset_, *llm, options_.agent);
  std::vector<Proposal> created = agent.propose(doc, input, first_index);

  std::lock_guard<std::mutex> lock(s.state);
  for (const auto& p : created) store_.append(*s.session, HistoryEventKind::ProposalCreated, {{"proposal", to_json(p)}});
  return created;
}

std::vector<Proposal> SessionService::proposals(const std::string& id) {
  Slot& s = slot(id);
  std::lock_guard<std::mutex> lock(s.state);
  return s.session->proposals;
}

Proposal SessionService::decide(const std::string& id, const std::string& proposal_id, Decision decision) {
  Slot& s = slot(id);
  BusyGuard busy(s.busy, id);
  std::lock_guard<std::mutex> lock(s.state);
  SessionState& st = *s.session;
  Proposal* found = st.find_proposal(proposal_id);
  if (!found) throw Error(ErrorCode::NotFound, "no proposal " + proposal_id + " in session " + id, proposal_id);
  if (found->status != ProposalStatus::Pending) {
    throw Error(ErrorCode::InvalidStatus,
                "proposal " + proposal_id + " is " + std::string(to_string(found->status)) + ", not Pending",
                proposal_id);
  }
  if (decision == Decision::Reject) {
    store_.append(st, HistoryEventKind::Rejected, {{"proposal_id", proposal_id}});
    return *st.find_proposal(proposal_id);
  }

  Proposal trial = *found;
  trial.transition(ProposalStatus::Approved);
  const std::string before = protocol_hash(st.protocol);
  try {
    EditResult result = execute(trial, st.protocol, toolset_);
    store_.append(st, HistoryEventKind::Applied,
                  {{"proposal_id", proposal_id}, {"before", before}, {"after", protocol_hash(result.document)}});
  } catch (const Error& e) {
    if (!trial.error) throw;
    json err{{"code", std::string(to_string(trial.error->code))}, {"message", trial.error->message}};
    if (!trial.error->where.empty()) err["where"] = trial.error->where;
    store_.append(st, HistoryEventKind::Failed, {{"proposal_id", proposal_id}, {"error", err}});
  }
  return *st.find_proposal(proposal_id);
}

std::string SessionService::protocol_xml(const std::string& id) {
  Slot& s = slot(id);
  std::lock_guard<std::mutex> lock(s.state);
  return serialize_protocol(s.session->protocol);
}

std::vector<HistoryEvent> SessionService::history(const std::string& id) {
  Slot& s = slot(id);
  std::lock_guard<std::mutex> lock(s.state);
  return s.session->history;
}

}  // namespace protoagent
