#pragma once

#include <memory>
#include <string>

#include "protoagent/service/session_service.hpp"

namespace httplib {
class Server;
}

namespace protoagent {

struct HttpServiceOptions {
  std::string cors_origin = "*";
};

/// REST front end:
///   GET  /health
///   POST /sessions                                  protocol XML body
///   GET  /sessions
///   GET  /sessions/{id}
///   POST /sessions/{id}/requests                    {"text"} | structured request
///   GET  /sessions/{id}/proposals
///   POST /sessions/{id}/proposals/{pid}/decision    {"decision": "approve"|"reject"}
///   GET  /sessions/{id}/protocol                    XML with ETag
///   GET  /sessions/{id}/history
/// Errors are JSON {code, message, detail}.
class HttpService {
 public:
  HttpService(SessionService& sessions, HttpServiceOptions options = {});
  ~HttpService();

  httplib::Server& server() { return *server_; }

  bool bind(const std::string& host, int port);
  /// Binds an ephemeral port and returns it, or -1.
  int bind_any(const std::string& host);
  /// Blocks until stop().
  bool listen_after_bind();
  void stop();

 private:
  void routes();

  SessionService* sessions_;
  HttpServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

int http_status_for(ErrorCode code);

}  // namespace protoagent
