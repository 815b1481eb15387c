#include "protoagent/service/store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <random>

#include "protoagent/agent/planner.hpp"
#include "protoagent/common/digest.hpp"
#include "protoagent/common/files.hpp"
#include "protoagent/protocol/codec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace protoagent {
namespace {

constexpr const char* kHistory = "history.jsonl";

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string new_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[20];
  std::snprintf(buf, sizeof buf, "s-%012llx", static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
  return buf;
}

Error corrupt(const fs::path& where, const std::string& message) {
  return Error(ErrorCode::IoError, "session store is corrupt: " + message, where.string());
}

HistoryEvent event_from_json(const json& j, const fs::path& where) {
  HistoryEvent e;
  try {
    e.seq = j.at("seq").get<std::size_t>();
    auto kind = history_event_from_string(j.at("event").get<std::string>());
    if (!kind) throw corrupt(where, "unknown event " + j.at("event").dump());
    e.event = *kind;
    e.at = j.at("at").get<std::string>();
    e.payload_digest = j.at("payload_digest").get<std::string>();
    e.payload = j.at("payload");
  } catch (const json::exception& ex) {
    throw corrupt(where, ex.what());
  }
  if (sha256_hex(e.payload.dump()) != e.payload_digest) throw corrupt(where, "payload digest mismatch");
  return e;
}

Proposal& need_proposal(SessionState& state, const json& payload) {
  const std::string id = payload.at("proposal_id").get<std::string>();
  Proposal* p = state.find_proposal(id);
  if (!p) throw Error(ErrorCode::IoError, "history refers to unknown proposal " + id);
  return *p;
}

}  // namespace

std::string_view to_string(HistoryEventKind kind) {
  switch (kind) {
    case HistoryEventKind::RequestSubmitted: return "RequestSubmitted";
    case HistoryEventKind::ProposalCreated: return "ProposalCreated";
    case HistoryEventKind::Approved: return "Approved";
    case HistoryEventKind::Rejected: return "Rejected";
    case HistoryEventKind::Applied: return "Applied";
    case HistoryEventKind::Failed: return "Failed";
  }
  return "?";
}

std::optional<HistoryEventKind> history_event_from_string(std::string_view text) {
  for (auto kind : {HistoryEventKind::RequestSubmitted, HistoryEventKind::ProposalCreated, HistoryEventKind::Approved,
                    HistoryEventKind::Rejected, HistoryEventKind::Applied, HistoryEventKind::Failed}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

json to_json(const HistoryEvent& e) {
  return {{"seq", e.seq},
          {"event", std::string(to_string(e.event))},
          {"at", e.at},
          {"payload_digest", e.payload_digest},
          {"payload", e.payload}};
}

Proposal* SessionState::find_proposal(std::string_view proposal_id) {
  for (auto& p : proposals) {
    if (p.id == proposal_id) return &p;
  }
  return nullptr;
}

std::string protocol_hash(const ProtocolDocument& doc) { return sha256_hex(serialize_protocol(doc)); }

void apply_event(SessionState& state, const HistoryEvent& event, const EditToolset& toolset) {
  const json& payload = event.payload;
  switch (event.event) {
    case HistoryEventKind::RequestSubmitted:
      break;
    case HistoryEventKind::ProposalCreated:
      state.proposals.push_back(proposal_from_json(payload.at("proposal"), "/proposal"));
      break;
    case HistoryEventKind::Approved:
      need_proposal(state, payload).transition(ProposalStatus::Approved);
      break;
    case HistoryEventKind::Rejected:
      need_proposal(state, payload).transition(ProposalStatus::Rejected);
      break;
    case HistoryEventKind::Applied: {
      Proposal& p = need_proposal(state, payload);
      if (protocol_hash(state.protocol) != payload.at("before").get<std::string>()) {
        throw Error(ErrorCode::IoError, "history replay diverges before " + p.id);
      }
      if (p.status == ProposalStatus::Pending) p.transition(ProposalStatus::Approved);
      EditResult result = execute(p, state.protocol, toolset);
      if (protocol_hash(result.document) != payload.at("after").get<std::string>()) {
        throw Error(ErrorCode::IoError, "history replay diverges after " + p.id);
      }
      state.protocol = std::move(result.document);
      break;
    }
    case HistoryEventKind::Failed: {
      Proposal& p = need_proposal(state, payload);
      if (p.status == ProposalStatus::Pending) p.transition(ProposalStatus::Approved);
      p.transition(ProposalStatus::Failed);
      const json& err = payload.at("error");
      auto code = error_code_from_string(err.at("code").get<std::string>());
      p.error = ProposalError{code.value_or(ErrorCode::PreconditionFailed), err.at("message").get<std::string>(),
                              err.value("where", "")};
      break;
    }
  }
  state.history.push_back(event);
}

SessionStore::SessionStore(fs::path root, EditToolset toolset) : root_(std::move(root)), toolset_(std::move(toolset)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create store directory: " + ec.message(), root_.string());
}

void SessionStore::hook(std::string_view point) const {
  if (hook_) hook_(point);
}

SessionState SessionStore::create(const ProtocolDocument& doc) {
  SessionState state;
  do {
    state.id = new_session_id();
  } while (exists(state.id));
  state.created_at = utc_now();
  state.original = doc;
  state.protocol = doc;

  const fs::path staging = root_ / ("." + state.id + ".tmp");
  fs::create_directories(staging);
  const std::string xml = serialize_protocol(doc);
  write_file_atomic((staging / "session.json").string(),
                    json{{"id", state.id}, {"created_at", state.created_at}}.dump(2) + "\n");
  write_file_atomic((staging / "original.xml").string(), xml);
  write_file_atomic((staging / "protocol.xml").string(), xml);
  write_file_atomic((staging / "proposals.json").string(), "[]\n");
  write_file_atomic((staging / kHistory).string(), "");
  std::error_code ec;
  fs::rename(staging, dir(state.id), ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot publish session: " + ec.message(), dir(state.id).string());
  hook("session-created");
  return state;
}

bool SessionStore::exists(const std::string& id) const {
  if (id.empty() || id.front() == '.' || id.find('/') != std::string::npos || id.find("..") != std::string::npos) {
    return false;
  }
  return fs::is_regular_file(dir(id) / "session.json");
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && exists(name)) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SessionState SessionStore::load(const std::string& id) {
  if (!exists(id)) throw Error(ErrorCode::NotFound, "no session " + id, id);
  const fs::path d = dir(id);
  SessionState state;
  json meta = json::parse(read_text_file((d / "session.json").string()), nullptr, false);
  if (meta.is_discarded() || !meta.contains("id") || !meta.contains("created_at")) {
    throw corrupt(d / "session.json", "invalid metadata");
  }
  state.id = meta["id"].get<std::string>();
  state.created_at = meta["created_at"].get<std::string>();
  state.original = parse_protocol(read_text_file((d / "original.xml").string()));
  state.protocol = state.original;

  const fs::path history_path = d / kHistory;
  std::string text = fs::exists(history_path) ? read_text_file(history_path.string()) : std::string();
  std::size_t keep = 0;  // bytes of intact history
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const bool final_line = end == std::string::npos || end + 1 == text.size();
    json j = json::parse(text.substr(pos, end == std::string::npos ? std::string::npos : end - pos), nullptr, false);
    if (end == std::string::npos || j.is_discarded()) {
      // A torn append can only be the final line.
      if (!final_line) throw corrupt(history_path, "unreadable line " + std::to_string(state.history.size() + 1));
      break;
    }
    HistoryEvent event = event_from_json(j, history_path);
    if (event.seq != state.history.size() + 1) throw corrupt(history_path, "sequence gap");
    apply_event(state, event, toolset_);
    keep = end + 1;
    pos = end + 1;
  }
  if (keep != text.size()) write_file_atomic(history_path.string(), text.substr(0, keep));
  write_snapshots(state, true);
  return state;
}

void SessionStore::append(SessionState& state, HistoryEventKind kind, json payload) {
  HistoryEvent event;
  event.seq = state.history.size() + 1;
  event.event = kind;
  event.at = utc_now();
  event.payload_digest = sha256_hex(payload.dump());
  event.payload = std::move(payload);

  SessionState next = state;
  apply_event(next, event, toolset_);
  append_file_durable((dir(state.id) / kHistory).string(), to_json(event).dump() + "\n");
  state = std::move(next);
  hook("history-appended");
  write_snapshots(state, false);
}

void SessionStore::write_snapshots(const SessionState& state, bool only_if_stale) {
  const fs::path d = dir(state.id);
  const std::string xml = serialize_protocol(state.protocol);
  const std::string proposals = to_json(state.proposals).dump(2) + "\n";
  auto stale = [&](const fs::path& p, const std::string& content) {
    if (!only_if_stale) return true;
    if (!fs::exists(p)) return true;
    return read_text_file(p.string()) != content;
  };
  if (stale(d / "protocol.xml", xml)) {
    write_file_atomic((d / "protocol.xml").string(), xml);
    hook("protocol-written");
  }
  if (stale(d / "proposals.json", proposals)) {
    write_file_atomic((d / "proposals.json").string(), proposals);
    hook("proposals-written");
  }
}

}  // namespace protoagent
