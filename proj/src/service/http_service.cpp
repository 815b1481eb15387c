#include "protoagent/service/http_service.hpp"

#include <httplib.h>

#include "protoagent/common/digest.hpp"
#include "protoagent/edit/json_codec.hpp"

using nlohmann::json;

namespace protoagent {
namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                json detail = json::object()) {
  send_json(res, status, {{"code", code}, {"message", message}, {"detail", std::move(detail)}});
}

json summary_json(const SessionSummary& s) {
  return {{"id", s.id},
          {"created_at", s.created_at},
          {"protocol_hash", s.protocol_hash},
          {"tree", s.tree.lines},
          {"proposals", s.proposals}};
}

json history_json(const HistoryEvent& e) {
  json j{{"seq", e.seq}, {"event", std::string(to_string(e.event))}, {"at", e.at}, {"payload_digest", e.payload_digest}};
  switch (e.event) {
    case HistoryEventKind::RequestSubmitted:
      j["kind"] = e.payload.at("kind");
      break;
    case HistoryEventKind::ProposalCreated:
      j["proposal_id"] = e.payload.at("proposal").at("id");
      break;
    case HistoryEventKind::Applied:
      j["proposal_id"] = e.payload.at("proposal_id");
      j["before"] = e.payload.at("before");
      j["after"] = e.payload.at("after");
      break;
    case HistoryEventKind::Failed:
      j["proposal_id"] = e.payload.at("proposal_id");
      j["error"] = e.payload.at("error");
      break;
    default:
      j["proposal_id"] = e.payload.at("proposal_id");
  }
  return j;
}

RequestInput request_from_body(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::JsonSchemaError, "request body is not valid JSON", "/");
  if (j.is_object() && j.contains("text")) {
    if (j.size() != 1) throw Error(ErrorCode::JsonSchemaError, "a text request has only the member 'text'", "/");
    if (!j["text"].is_string()) throw Error(ErrorCode::JsonSchemaError, "expected a string", "/text");
    return RequestInput::text(j["text"].get<std::string>());
  }
  return RequestInput::json(body);
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Busy:
    case ErrorCode::InvalidStatus: return 409;
    case ErrorCode::BackendError:
    case ErrorCode::RateLimited:
    case ErrorCode::ScriptMiss:
    case ErrorCode::SchemaViolation:
    case ErrorCode::MalformedRouterOutput:
    case ErrorCode::MalformedPlan:
    case ErrorCode::MalformedOutput: return 502;
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

HttpService::HttpService(SessionService& sessions, HttpServiceOptions options)
    : sessions_(&sessions), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  // SO_REUSEPORT would let a second server share an occupied port.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  routes();
}

HttpService::~HttpService() { stop(); }

bool HttpService::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

int HttpService::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpService::listen_after_bind() { return server_->listen_after_bind(); }

void HttpService::stop() {
  if (server_->is_running()) server_->stop();
}

void HttpService::routes() {
  auto& srv = *server_;
  const std::string origin = options_.cors_origin;

  srv.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Expose-Headers", "ETag");
  });
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, If-None-Match");
    res.status = 204;
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const InvalidUpload& e) {
      send_error(res, 400, to_string(e.code()), e.message(), to_json(e.report()));
    } catch (const Error& e) {
      json detail = json::object();
      if (!e.where().empty()) detail["where"] = e.where();
      if (e.code() == ErrorCode::RateLimited || e.code() == ErrorCode::BackendError) {
        detail["retry"] = "the language model backend failed; resubmit the request";
      }
      send_error(res, http_status_for(e.code()), to_string(e.code()), e.message(), detail);
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  });

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    std::string xml = req.body;
    if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
      json j = json::parse(req.body, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("protocol_xml") || !j["protocol_xml"].is_string()) {
        throw Error(ErrorCode::JsonSchemaError, "expected {\"protocol_xml\": string}", "/protocol_xml");
      }
      xml = j["protocol_xml"].get<std::string>();
    }
    send_json(res, 201, summary_json(sessions_->create_session(xml)));
  });

  srv.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"sessions", sessions_->list_sessions()}});
  });

  srv.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, summary_json(sessions_->summary(req.matches[1])));
  });

  srv.Post(R"(/sessions/([^/]+)/requests)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    sessions_->summary(id);  // 404 before body errors
    auto created = sessions_->submit_request(id, request_from_body(req.body));
    send_json(res, 201, {{"proposals", to_json(created)}});
  });

  srv.Get(R"(/sessions/([^/]+)/proposals)", [this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, {{"proposals", to_json(sessions_->proposals(req.matches[1]))}});
  });

  srv.Post(R"(/sessions/([^/]+)/proposals/([^/]+)/decision)",
           [this](const httplib::Request& req, httplib::Response& res) {
             json j = json::parse(req.body, nullptr, false);
             if (j.is_discarded() || !j.is_object() || !j.contains("decision") || !j["decision"].is_string()) {
               throw Error(ErrorCode::JsonSchemaError, "expected {\"decision\": \"approve\" | \"reject\"}", "/decision");
             }
             const std::string d = j["decision"].get<std::string>();
             if (d != "approve" && d != "reject") {
               throw Error(ErrorCode::JsonSchemaError, "decision must be approve or reject", "/decision");
             }
             Proposal p = sessions_->decide(req.matches[1], req.matches[2], d == "approve" ? Decision::Approve
                                                                                            : Decision::Reject);
             json body = to_json(p);
             body["protocol_hash"] = sessions_->summary(req.matches[1]).protocol_hash;
             send_json(res, 200, body);
           });

  srv.Get(R"(/sessions/([^/]+)/protocol)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string xml = sessions_->protocol_xml(req.matches[1]);
    const std::string etag = "\"" + sha256_hex(xml) + "\"";
    res.set_header("ETag", etag);
    if (req.get_header_value("If-None-Match") == etag) {
      res.status = 304;
      return;
    }
    res.status = 200;
    res.set_content(xml, "application/xml");
  });

  srv.Get(R"(/sessions/([^/]+)/history)", [this](const httplib::Request& req, httplib::Response& res) {
    json events = json::array();
    for (const auto& e : sessions_->history(req.matches[1])) events.push_back(history_json(e));
    send_json(res, 200, {{"events", events}});
  });

  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) send_error(res, 404, "NotFound", "no route for " + req.path);
  });
}

}  // namespace protoagent
