#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoagent/agent/types.hpp"
#include "protoagent/edit/toolset.hpp"
#include "protoagent/protocol/document.hpp"

namespace protoagent {

enum class HistoryEventKind { RequestSubmitted, ProposalCreated, Approved, Rejected, Applied, Failed };

std::string_view to_string(HistoryEventKind kind);
std::optional<HistoryEventKind> history_event_from_string(std::string_view text);

struct HistoryEvent {
  std::size_t seq = 0;
  HistoryEventKind event = HistoryEventKind::RequestSubmitted;
  std::string at;              // UTC, ISO 8601
  std::string payload_digest;  // sha256 of the compact payload JSON
  nlohmann::json payload;
};

nlohmann::json to_json(const HistoryEvent& event);

struct SessionState {
  std::string id;
  std::string created_at;
  ProtocolDocument original;
  ProtocolDocument protocol;
  std::vector<Proposal> proposals;
  std::vector<HistoryEvent> history;

  Proposal* find_proposal(std::string_view proposal_id);
};

std::string protocol_hash(const ProtocolDocument& doc);

/// One directory per session under `root`:
///   session.json, original.xml, protocol.xml, proposals.json, history.jsonl
/// history.jsonl is written first and is the source of truth; the other
/// files are snapshots rebuilt from it on load.
class SessionStore {
 public:
  /// Called after every durable write with the name of the write point.
  using WriteHook = std::function<void(std::string_view point)>;

  explicit SessionStore(std::filesystem::path root, EditToolset toolset = EditToolset());

  const std::filesystem::path& root() const { return root_; }
  void set_write_hook(WriteHook hook) { hook_ = std::move(hook); }

  SessionState create(const ProtocolDocument& doc);

  /// Replays history, drops a torn final line and rewrites stale snapshots.
  /// Throws NotFound or IoError.
  SessionState load(const std::string& id);

  std::vector<std::string> list() const;
  bool exists(const std::string& id) const;

  /// Appends the event, then refreshes the snapshots.
  void append(SessionState& state, HistoryEventKind kind, nlohmann::json payload);

 private:
  std::filesystem::path dir(const std::string& id) const { return root_ / id; }
  void write_snapshots(const SessionState& state, bool only_if_stale);
  void hook(std::string_view point) const;

  std::filesystem::path root_;
  EditToolset toolset_;
  WriteHook hook_;
};

/// Applies one history event to a session state in memory. Applied events
/// are re-executed and checked against their recorded hashes.
void apply_event(SessionState& state, const HistoryEvent& event, const EditToolset& toolset);

}  // namespace protoagent
