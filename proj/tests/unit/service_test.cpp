#include <gtest/gtest.h>

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <future>
#include <thread>

#include "protoagent/common/digest.hpp"
#include "protoagent/common/files.hpp"
#include "protoagent/edit/json_codec.hpp"
#include "protoagent/llm/scripted.hpp"
#include "protoagent/protocol/codec.hpp"
#include "protoagent/service/http_service.hpp"
#include "support/generators.hpp"
#include "support/tempdir.hpp"

using namespace protoagent;
using nlohmann::json;
using protoagent::testkit::fixture_path;
using protoagent::testkit::read_fixture;
using protoagent::testkit::TempDir;
namespace fs = std::filesystem;

namespace {

std::string thorax_xml() { return read_fixture("protocols/adult_thorax.xml"); }

std::string scenario_request(const std::string& name) {
  std::string text = read_fixture("scenarios/" + name + "/request.txt");
  while (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::unique_ptr<ChatBackend> scenario_backend(const std::string& name) {
  return std::make_unique<ScriptedBackend>(load_script(fixture_path("scenarios/" + name + "/script.json")));
}

BackendFactory scenario_factory(const std::string& name) {
  return [name](const std::string&) { return scenario_backend(name); };
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::PreconditionFailed;
}

class CountingBackend : public ChatBackend {
 public:
  explicit CountingBackend(std::shared_ptr<std::atomic<int>> calls) : calls_(std::move(calls)) {}
  ChatMessage complete(const std::vector<ChatMessage>&, const std::vector<ToolSchema>&, const ChatParams&) override {
    ++*calls_;
    throw Error(ErrorCode::ScriptMiss, "no chat expected");
  }

 private:
  std::shared_ptr<std::atomic<int>> calls_;
};

class FailingBackend : public ChatBackend {
 public:
  ChatMessage complete(const std::vector<ChatMessage>&, const std::vector<ToolSchema>&, const ChatParams&) override {
    throw Error(ErrorCode::BackendError, "upstream returned 503");
  }
};

struct Gate {
  std::mutex m;
  std::condition_variable cv;
  bool entered = false;
  bool open = false;
};

class GatedBackend : public ChatBackend {
 public:
  GatedBackend(std::shared_ptr<Gate> gate, std::unique_ptr<ChatBackend> inner)
      : gate_(std::move(gate)), inner_(std::move(inner)) {}
  ChatMessage complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                       const ChatParams& params) override {
    std::unique_lock<std::mutex> lock(gate_->m);
    gate_->entered = true;
    gate_->cv.notify_all();
    gate_->cv.wait(lock, [&] { return gate_->open; });
    lock.unlock();
    return inner_->complete(messages, tools, params);
  }

 private:
  std::shared_ptr<Gate> gate_;
  std::unique_ptr<ChatBackend> inner_;
};

struct Crash {};

std::size_t count_events(const std::vector<HistoryEvent>& history, HistoryEventKind kind) {
  return static_cast<std::size_t>(
      std::count_if(history.begin(), history.end(), [&](const HistoryEvent& e) { return e.event == kind; }));
}

class Server {
 public:
  explicit Server(SessionServiceOptions options, HttpServiceOptions http = {})
      : service_(std::move(options)), http_(service_, std::move(http)) {
    port_ = http_.bind_any("127.0.0.1");
    EXPECT_GT(port_, 0);
    thread_ = std::thread([this] { http_.listen_after_bind(); });
    http_.server().wait_until_ready();
  }
  ~Server() {
    http_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }
  SessionService& service() { return service_; }

 private:
  SessionService service_;
  HttpService http_;
  int port_ = 0;
  std::thread thread_;
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

std::string text_request(const std::string& text) { return json{{"text", text}}.dump(); }

}  // namespace

TEST(Store, CreateWritesLayout) {
  TempDir tmp;
  SessionStore store(tmp.path());
  auto state = store.create(parse_protocol(thorax_xml()));
  EXPECT_EQ(state.id.size(), 14u);
  EXPECT_EQ(state.id.rfind("s-", 0), 0u);
  for (const char* f : {"session.json", "original.xml", "protocol.xml", "proposals.json", "history.jsonl"}) {
    EXPECT_TRUE(fs::exists(tmp / state.id / f)) << f;
  }
  EXPECT_EQ(store.list(), std::vector<std::string>{state.id});
  EXPECT_FALSE(store.exists("../etc"));
  EXPECT_EQ(code_of([&] { store.load("s-000000000000"); }), ErrorCode::NotFound);
}

TEST(Store, ReplayRebuildsSnapshots) {
  TempDir tmp;
  SessionService service({tmp.path(), {}, scenario_factory("lungcad")});
  auto summary = service.create_session(thorax_xml());
  auto proposals = service.submit_request(summary.id, RequestInput::text(scenario_request("lungcad")));
  ASSERT_EQ(proposals.size(), 1u);
  service.decide(summary.id, proposals[0].id, Decision::Approve);
  const std::string expected_xml = service.protocol_xml(summary.id);
  EXPECT_EQ(read_text_file((tmp / summary.id / "protocol.xml").string()), expected_xml);

  fs::remove(tmp / summary.id / "protocol.xml");
  write_file_atomic((tmp / summary.id / "proposals.json").string(), "[]\n");
  SessionStore store(tmp.path());
  auto state = store.load(summary.id);
  EXPECT_EQ(serialize_protocol(state.protocol), expected_xml);
  EXPECT_EQ(state.history.size(), 3u);
  EXPECT_EQ(state.proposals.at(0).status, ProposalStatus::Applied);
  EXPECT_EQ(read_text_file((tmp / summary.id / "protocol.xml").string()), expected_xml);
  EXPECT_EQ(json::parse(read_text_file((tmp / summary.id / "proposals.json").string())), to_json(state.proposals));
}

TEST(Store, TornFinalLineIsDropped) {
  TempDir tmp;
  SessionService service({tmp.path(), {}, scenario_factory("lungcad")});
  auto summary = service.create_session(thorax_xml());
  service.submit_request(summary.id, RequestInput::text(scenario_request("lungcad")));
  const fs::path history = tmp / summary.id / "history.jsonl";
  const std::string intact = read_text_file(history.string());
  std::ofstream(history, std::ios::app) << R"({"seq":3,"event":"Appl)";

  SessionStore store(tmp.path());
  auto state = store.load(summary.id);
  EXPECT_EQ(state.history.size(), 2u);
  EXPECT_EQ(state.proposals.at(0).status, ProposalStatus::Pending);
  EXPECT_EQ(read_text_file(history.string()), intact);
}

TEST(Store, CorruptionBeforeTheEndIsAnError) {
  TempDir tmp;
  SessionService service({tmp.path(), {}, scenario_factory("lungcad")});
  auto summary = service.create_session(thorax_xml());
  service.submit_request(summary.id, RequestInput::text(scenario_request("lungcad")));
  const fs::path history = tmp / summary.id / "history.jsonl";
  std::string text = read_text_file(history.string());
  text.replace(text.find("\"seq\":1"), 7, "\"seq\":7");
  write_file_atomic(history.string(), text);
  SessionStore store(tmp.path());
  EXPECT_EQ(code_of([&] { store.load(summary.id); }), ErrorCode::IoError);

  text.replace(text.find("\"seq\":7"), 7, "\"seq\":1");
  text.insert(text.find('\n') + 1, "garbage\n");
  write_file_atomic(history.string(), text);
  EXPECT_EQ(code_of([&] { store.load(summary.id); }), ErrorCode::IoError);
}

TEST(Store, CrashAtEveryWritePointRecovers) {
  // Crash after the n-th durable write of a submit+approve run, then reload.
  std::size_t total_points = 0;
  {
    TempDir tmp;
    SessionService service({tmp.path(), {}, scenario_factory("lungcad")});
    service.store().set_write_hook([&](std::string_view) { ++total_points; });
    auto s = service.create_session(thorax_xml());
    auto p = service.submit_request(s.id, RequestInput::text(scenario_request("lungcad")));
    service.decide(s.id, p[0].id, Decision::Approve);
  }
  ASSERT_GE(total_points, 7u);

  const auto final_doc =
      EditToolset().delete_entity(parse_protocol(thorax_xml()), "recon-lungcad").document;
  for (std::size_t crash_at = 1; crash_at <= total_points; ++crash_at) {
    TempDir tmp;
    std::vector<std::string> points;
    std::string id;
    {
      SessionService service({tmp.path(), {}, scenario_factory("lungcad")});
      service.store().set_write_hook([&](std::string_view point) {
        points.emplace_back(point);
        if (points.size() == crash_at) throw Crash{};
      });
      try {
        id = service.create_session(thorax_xml()).id;
        auto p = service.submit_request(id, RequestInput::text(scenario_request("lungcad")));
        service.decide(id, p[0].id, Decision::Approve);
      } catch (const Crash&) {
      }
    }
    SessionStore store(tmp.path());
    const auto ids = store.list();
    ASSERT_EQ(ids.size(), 1u) << "crash at " << crash_at;
    auto state = store.load(ids[0]);

    // The recovered state is a prefix of the run and its snapshots agree with it.
    const std::size_t events = state.history.size();
    const fs::path d = tmp / ids[0];
    EXPECT_EQ(read_text_file((d / "protocol.xml").string()), serialize_protocol(state.protocol)) << crash_at;
    EXPECT_EQ(json::parse(read_text_file((d / "proposals.json").string())), to_json(state.proposals)) << crash_at;
    if (events == 3) {
      EXPECT_EQ(state.protocol, final_doc);
    } else {
      EXPECT_EQ(state.protocol, parse_protocol(thorax_xml())) << crash_at << " / " << points.back();
    }

    // A fresh service can continue from the recovered state.
    SessionService resumed({tmp.path(), {}, scenario_factory("lungcad")});
    if (events < 2) {
      auto p = resumed.submit_request(ids[0], RequestInput::text(scenario_request("lungcad")));
      resumed.decide(ids[0], p.back().id, Decision::Approve);
    } else if (events == 2) {
      resumed.decide(ids[0], "p1", Decision::Approve);
    }
    EXPECT_EQ(parse_protocol(resumed.protocol_xml(ids[0])), final_doc) << crash_at;
  }
}

TEST(Service, RejectLeavesProtocolUnchanged) {
  TempDir tmp;
  SessionService service({tmp.path(), {}, scenario_factory("lungcad")});
  auto s = service.create_session(thorax_xml());
  auto p = service.submit_request(s.id, RequestInput::text(scenario_request("lungcad")));
  auto rejected = service.decide(s.id, p[0].id, Decision::Reject);
  EXPECT_EQ(rejected.status, ProposalStatus::Rejected);
  EXPECT_EQ(service.summary(s.id).protocol_hash, s.protocol_hash);
  EXPECT_EQ(code_of([&] { service.decide(s.id, p[0].id, Decision::Approve); }), ErrorCode::InvalidStatus);
  EXPECT_EQ(code_of([&] { service.decide(s.id, "p9", Decision::Approve); }), ErrorCode::NotFound);
}

TEST(Service, InvalidUploadCarriesReport) {
  TempDir tmp;
  SessionService service({tmp.path(), {}, {}});
  try {
    service.create_session("<Protocol>");
    FAIL();
  } catch (const InvalidUpload& e) {
    EXPECT_FALSE(e.report().ok);
  }
  EXPECT_TRUE(service.list_sessions().empty());
}

TEST(Service, FailedExecutionIsRecorded) {
  TempDir tmp;
  SessionService service({tmp.path(), {}, scenario_factory("lateral_topo")});
  auto s = service.create_session(thorax_xml());
  auto p = service.submit_request(s.id, RequestInput::text(scenario_request("lateral_topo")));
  ASSERT_FALSE(p.empty());
  auto decided = service.decide(s.id, p[0].id, Decision::Approve);
  EXPECT_EQ(decided.status, ProposalStatus::Failed);
  ASSERT_TRUE(decided.error);
  EXPECT_EQ(decided.error->code, ErrorCode::ValueNotAllowed);
  EXPECT_EQ(service.summary(s.id).protocol_hash, s.protocol_hash);
  EXPECT_EQ(count_events(service.history(s.id), HistoryEventKind::Failed), 1u);

  SessionStore store(tmp.path());
  EXPECT_EQ(store.load(s.id).proposals.at(0).status, ProposalStatus::Failed);
}

TEST(Service, StructuredRequestMakesNoChatCalls) {
  TempDir tmp;
  auto calls = std::make_shared<std::atomic<int>>(0);
  SessionService service({tmp.path(), {}, [calls](const std::string&) { return std::make_unique<CountingBackend>(calls); }});
  auto s = service.create_session(thorax_xml());
  auto p = service.submit_request(
      s.id, RequestInput::json(R"({"operation":"delete","target":{"entity_type":"CTReconEntity","name_contains":"LungCAD"}})"));
  ASSERT_EQ(p.size(), 1u);
  service.decide(s.id, p[0].id, Decision::Approve);
  EXPECT_EQ(calls->load(), 0);
  EXPECT_EQ(parse_protocol(service.protocol_xml(s.id)),
            EditToolset().delete_entity(parse_protocol(thorax_xml()), "recon-lungcad").document);

  const auto before = service.history(s.id).size();
  EXPECT_EQ(code_of([&] { service.submit_request(s.id, RequestInput::json(R"({"operation":"explode"})")); }),
            ErrorCode::JsonSchemaError);
  EXPECT_EQ(service.history(s.id).size(), before);
}

TEST(Http, EndToEndLungCadLoop) {
  TempDir tmp;
  Server server({tmp.path(), {}, scenario_factory("lungcad")});
  auto client = server.client();
  const auto start = std::chrono::steady_clock::now();

  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto created = client.Post("/sessions", thorax_xml(), "application/xml");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  const json session = body_of(created);
  const std::string id = session["id"];
  EXPECT_FALSE(session["tree"].empty());

  auto submitted = client.Post("/sessions/" + id + "/requests", text_request(scenario_request("lungcad")), "application/json");
  ASSERT_EQ(submitted->status, 201);
  const json proposals = body_of(submitted)["proposals"];
  ASSERT_EQ(proposals.size(), 1u);
  EXPECT_EQ(proposals[0]["status"], "Pending");
  const std::string pid = proposals[0]["id"];

  auto approved = client.Post("/sessions/" + id + "/proposals/" + pid + "/decision", R"({"decision":"approve"})",
                              "application/json");
  ASSERT_EQ(approved->status, 200);
  EXPECT_EQ(body_of(approved)["status"], "Applied");

  auto download = client.Get("/sessions/" + id + "/protocol");
  ASSERT_EQ(download->status, 200);
  const auto expected = EditToolset().delete_entity(parse_protocol(thorax_xml()), "recon-lungcad").document;
  EXPECT_EQ(parse_protocol(download->body), expected);
  EXPECT_EQ(download->get_header_value("ETag"), "\"" + sha256_hex(download->body) + "\"");
  EXPECT_EQ(body_of(approved)["protocol_hash"], sha256_hex(download->body));
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(2));

  auto again = client.Post("/sessions/" + id + "/proposals/" + pid + "/decision", R"({"decision":"approve"})",
                           "application/json");
  EXPECT_EQ(again->status, 409);
  EXPECT_EQ(body_of(again)["code"], "InvalidStatus");

  auto history = body_of(client.Get("/sessions/" + id + "/history"))["events"];
  ASSERT_EQ(history.size(), 3u);
  EXPECT_EQ(history[0]["event"], "RequestSubmitted");
  EXPECT_EQ(history[1]["event"], "ProposalCreated");
  EXPECT_EQ(history[2]["event"], "Applied");
  EXPECT_EQ(history[2]["before"], session["protocol_hash"]);
  EXPECT_EQ(history[2]["after"], sha256_hex(download->body));
}

TEST(Http, ConditionalDownloadAndCors) {
  TempDir tmp;
  Server server({tmp.path(), {}, {}}, {"http://localhost:5173"});
  auto client = server.client();
  const std::string id = body_of(client.Post("/sessions", json{{"protocol_xml", thorax_xml()}}.dump(), "application/json"))["id"];
  auto first = client.Get("/sessions/" + id + "/protocol");
  const std::string etag = first->get_header_value("ETag");
  EXPECT_EQ(first->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
  auto cached = client.Get("/sessions/" + id + "/protocol", {{"If-None-Match", etag}});
  EXPECT_EQ(cached->status, 304);
  EXPECT_TRUE(cached->body.empty());

  auto preflight = client.Options("/sessions");
  EXPECT_EQ(preflight->status, 204);
  EXPECT_NE(preflight->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST(Http, ErrorMapping) {
  TempDir tmp;
  Server server({tmp.path(), {}, [](const std::string&) { return std::make_unique<FailingBackend>(); }});
  auto client = server.client();

  auto missing = client.Get("/sessions/s-000000000000");
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(body_of(missing)["code"], "NotFound");
  EXPECT_EQ(client.Get("/sessions/s-000000000000/protocol")->status, 404);
  EXPECT_EQ(client.Get("/nowhere")->status, 404);

  auto invalid = client.Post("/sessions", "<Protocol>", "application/xml");
  EXPECT_EQ(invalid->status, 400);
  EXPECT_EQ(body_of(invalid)["code"], "SyntaxError");
  EXPECT_TRUE(body_of(invalid)["detail"].contains("issues"));

  const std::string id = body_of(client.Post("/sessions", thorax_xml(), "application/xml"))["id"];
  EXPECT_EQ(client.Post("/sessions/" + id + "/requests", "not json", "application/json")->status, 400);
  EXPECT_EQ(client.Post("/sessions/" + id + "/proposals/p1/decision", R"({"decision":"approve"})", "application/json")->status,
            404);
  EXPECT_EQ(client.Post("/sessions/" + id + "/proposals/p1/decision", R"({"decision":"maybe"})", "application/json")->status,
            400);

  auto upstream = client.Post("/sessions/" + id + "/requests", text_request("delete the lung cad"), "application/json");
  EXPECT_EQ(upstream->status, 502);
  EXPECT_EQ(body_of(upstream)["code"], "BackendError");
  EXPECT_TRUE(body_of(upstream)["detail"].contains("retry"));

  EXPECT_EQ(http_status_for(ErrorCode::Busy), 409);
  EXPECT_EQ(http_status_for(ErrorCode::IoError), 500);
  EXPECT_EQ(http_status_for(ErrorCode::MalformedPlan), 502);
}

TEST(Http, ConcurrentMutationIsBusy) {
  TempDir tmp;
  auto gate = std::make_shared<Gate>();
  Server server({tmp.path(), {}, [gate](const std::string&) {
                   return std::make_unique<GatedBackend>(gate, scenario_backend("lungcad"));
                 }});
  auto client = server.client();
  const std::string id = body_of(client.Post("/sessions", thorax_xml(), "application/xml"))["id"];

  auto first = std::async(std::launch::async, [&] {
    return server.client().Post("/sessions/" + id + "/requests", text_request(scenario_request("lungcad")),
                                "application/json");
  });
  {
    std::unique_lock<std::mutex> lock(gate->m);
    ASSERT_TRUE(gate->cv.wait_for(lock, std::chrono::seconds(5), [&] { return gate->entered; }));
  }
  auto second = client.Post("/sessions/" + id + "/requests", text_request("again"), "application/json");
  EXPECT_EQ(second->status, 409);
  EXPECT_EQ(body_of(second)["code"], "Busy");
  EXPECT_EQ(client.Get("/sessions/" + id + "/proposals")->status, 200);
  {
    std::lock_guard<std::mutex> lock(gate->m);
    gate->open = true;
  }
  gate->cv.notify_all();
  auto done = first.get();
  ASSERT_TRUE(done);
  EXPECT_EQ(done->status, 201);
  EXPECT_EQ(body_of(client.Get("/sessions/" + id + "/history"))["events"].size(), 2u);
}

TEST(Http, StructuredRequestOverHttp) {
  TempDir tmp;
  auto calls = std::make_shared<std::atomic<int>>(0);
  Server server({tmp.path(), {}, [calls](const std::string&) { return std::make_unique<CountingBackend>(calls); }});
  auto client = server.client();
  const std::string id = body_of(client.Post("/sessions", thorax_xml(), "application/xml"))["id"];
  auto r = client.Post("/sessions/" + id + "/requests",
                       R"({"operation":"modify","target":{"entity_type":"FrameOfReferenceEntity"},)"
                       R"("changes":[{"essential":"PatientPositionEssential","value":{"type":"EnumToken","payload":"FaceUpFeetFirst"}}]})",
                       "application/json");
  ASSERT_EQ(r->status, 201) << r->body;
  EXPECT_EQ(calls->load(), 0);
  EXPECT_EQ(body_of(client.Get("/sessions"))["sessions"], json::array({id}));
}
