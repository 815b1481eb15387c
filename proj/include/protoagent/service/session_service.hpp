#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "protoagent/agent/agent.hpp"
#include "protoagent/llm/config.hpp"
#include "protoagent/protocol/validation.hpp"
#include "protoagent/service/store.hpp"

namespace protoagent {

/// Upload rejected by validate_syntax.
class InvalidUpload : public Error {
 public:
  explicit InvalidUpload(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Chat backend for one session; called once per session and cached.
using BackendFactory = std::function<std::unique_ptr<ChatBackend>(const std::string& session_id)>;

BackendFactory backend_factory_from_config(const LlmConfig& config);

struct SessionServiceOptions {
  std::filesystem::path store_dir;
  AgentOptions agent;
  BackendFactory backend;  // defaults to a mock without a script
};

struct SessionSummary {
  std::string id;
  std::string created_at;
  std::string protocol_hash;
  SimplifiedTree tree;
  std::size_t proposals = 0;
};

enum class Decision { Approve, Reject };

/// Transport-free session operations. Mutations on one session are
/// serialized; a second concurrent mutation fails with Busy.
class SessionService {
 public:
  explicit SessionService(SessionServiceOptions options);
  ~SessionService();

  SessionStore& store() { return store_; }

  SessionSummary create_session(std::string_view protocol_xml);
  SessionSummary summary(const std::string& id);
  std::vector<std::string> list_sessions() const { return store_.list(); }

  std::vector<Proposal> submit_request(const std::string& id, const RequestInput& input);
  std::vector<Proposal> proposals(const std::string& id);
  Proposal decide(const std::string& id, const std::string& proposal_id, Decision decision);
  std::string protocol_xml(const std::string& id);
  std::vector<HistoryEvent> history(const std::string& id);

 private:
  struct Slot;
  Slot& slot(const std::string& id);
  ChatBackend& backend(Slot& s, const std::string& id);

  SessionServiceOptions options_;
  EditToolset toolset_;
  SessionStore store_;
  std::mutex slots_mutex_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
};

}  // namespace protoagent
