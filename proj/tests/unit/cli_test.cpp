#include <gtest/gtest.h>

#include <httplib.h>

#include <sstream>

#include "protoagent/cli/cli.hpp"
#include "protoagent/common/files.hpp"
#include "protoagent/eval/benchmark.hpp"
#include "protoagent/llm/scripted.hpp"
#include "protoagent/protocol/codec.hpp"
#include "protoagent/service/session_service.hpp"
#include "support/generators.hpp"
#include "support/tempdir.hpp"

using namespace protoagent;
using nlohmann::json;
using protoagent::testkit::fixture_path;
using protoagent::testkit::read_fixture;
using protoagent::testkit::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string request_text(const std::string& path) {
  std::string text = read_text_file(path);
  while (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::string lungcad_script() { return fixture_path("scenarios/lungcad/script.json"); }

}  // namespace

TEST(CliValidate, ExitCodes) {
  EXPECT_EQ(cli({"validate", fixture_path("protocols/adult_thorax.xml")}).code, kExitOk);

  auto empty = cli({"validate", fixture_path("protocols/empty_compound.xml")});
  EXPECT_EQ(empty.code, kExitFailure);
  EXPECT_NE(empty.out.find("EMPTY_COMPOUND"), std::string::npos);

  auto lateral = cli({"--json", "validate", fixture_path("protocols/lateral_topo_negative.xml")});
  EXPECT_EQ(lateral.code, kExitFailure);
  EXPECT_EQ(json::parse(lateral.out)["issues"][0]["code"], "VALUE_NOT_ALLOWED");

  auto missing = cli({"validate", "/nonexistent/protocol.xml"});
  EXPECT_EQ(missing.code, kExitInput);
  EXPECT_NE(missing.err.find("IoError"), std::string::npos);

  EXPECT_EQ(cli({"frobnicate"}).code, kExitInput);
  EXPECT_EQ(cli({}).code, kExitInput);
}

TEST(CliTree, OneLinePerEntity) {
  auto r = cli({"tree", fixture_path("protocols/adult_thorax.xml")});
  EXPECT_EQ(r.code, kExitOk);
  const auto doc = parse_protocol(read_fixture("protocols/adult_thorax.xml"));
  EXPECT_EQ(static_cast<std::size_t>(std::count(r.out.begin(), r.out.end(), '\n')), collect_ids(doc.root).size());
}

TEST(CliApply, LungCadWithYes) {
  TempDir tmp;
  const std::string out = (tmp / "out.xml").string();
  auto r = cli({"apply", fixture_path("protocols/adult_thorax.xml"), "--request",
                request_text(fixture_path("scenarios/lungcad/request.txt")), "--script", lungcad_script(), "--yes",
                "--out", out});
  ASSERT_EQ(r.code, kExitOk) << r.out << r.err;
  const auto written = parse_protocol(read_text_file(out));
  EXPECT_FALSE(find_entity(written, "recon-lungcad"));
  EXPECT_FALSE(find_entity(written, "recon-cad"));
  EXPECT_EQ(read_text_file(out), serialize_protocol(written));
  EXPECT_NE(r.out.find("p1 applied"), std::string::npos);
}

TEST(CliApply, InteractiveApproveAndReject) {
  TempDir tmp;
  const std::string out = (tmp / "out.xml").string();
  std::vector<std::string> args = {"apply", fixture_path("protocols/adult_thorax.xml"), "--request",
                                   request_text(fixture_path("scenarios/lungcad/request.txt")), "--script",
                                   lungcad_script(), "--out", out};
  auto rejected = cli(args, "n\n");
  EXPECT_EQ(rejected.code, kExitFailure);
  EXPECT_NE(rejected.out.find("Approve p1? [y/N]"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));

  auto approved = cli(args, "y\n");
  EXPECT_EQ(approved.code, kExitOk);
  EXPECT_TRUE(fs::exists(out));
}

TEST(CliApply, ArgumentAndBackendErrors) {
  TempDir tmp;
  const std::string thorax = fixture_path("protocols/adult_thorax.xml");
  const std::string out = (tmp / "out.xml").string();
  const std::string request_json = fixture_path("cases/json-03-lungcad/request.json");
  EXPECT_EQ(cli({"apply", thorax, "--request", "x", "--request-json", request_json, "--out", out}).code, kExitInput);
  EXPECT_EQ(cli({"apply", thorax, "--out", out}).code, kExitInput);
  EXPECT_EQ(cli({"apply", thorax, "--request", "x", "--yes", "--interactive", "--out", out}).code, kExitInput);
  EXPECT_EQ(cli({"apply", "/nonexistent.xml", "--request", "x", "--yes", "--out", out}).code, kExitInput);

  // An empty script cannot answer the router.
  write_file_atomic((tmp / "empty.json").string(), "[]");
  auto r = cli({"apply", thorax, "--request", "delete the lung cad", "--script", (tmp / "empty.json").string(), "--yes",
                "--out", out});
  EXPECT_EQ(r.code, kExitBackend);
  EXPECT_NE(r.err.find("ScriptMiss"), std::string::npos);

  // Failed proposal: nothing written.
  auto lateral = cli({"apply", thorax, "--request", request_text(fixture_path("scenarios/lateral_topo/request.txt")),
                      "--script", fixture_path("scenarios/lateral_topo/script.json"), "--yes", "--out", out});
  EXPECT_EQ(lateral.code, kExitFailure);
  EXPECT_NE(lateral.out.find("ValueNotAllowed"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));

  EXPECT_EQ(cli({"--llm", "bogus", "validate", thorax}).code, kExitInput);
  EXPECT_EQ(cli({"--config", "/nonexistent.json", "apply", thorax, "--request", "x", "--yes", "--out", out}).code,
            kExitInput);
}

TEST(CliApply, StructuredRequestNeedsNoScript) {
  TempDir tmp;
  const std::string out = (tmp / "out.xml").string();
  auto r = cli({"--json", "apply", fixture_path("protocols/adult_thorax.xml"), "--request-json",
                fixture_path("cases/json-03-lungcad/request.json"), "--yes", "--out", out});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto j = json::parse(r.out);
  EXPECT_TRUE(j["written"]);
  EXPECT_EQ(j["proposals"][0]["status"], "Applied");
}

TEST(CliEval, WritesReportAndHandlesBadInput) {
  TempDir tmp;
  auto r = cli({"--llm", "mock", "eval", "--cases", fixture_path("cases"), "--out", (tmp / "report").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(read_text_file((tmp / "report" / "report.json").string()), read_fixture("golden/benchmark/report.json"));
  EXPECT_EQ(r.out, read_fixture("golden/benchmark/report.md"));

  fs::create_directories(tmp / "empty");
  EXPECT_EQ(cli({"eval", "--cases", (tmp / "empty").string(), "--out", (tmp / "x").string()}).code, kExitInput);
  EXPECT_EQ(cli({"eval", "--cases", (tmp / "absent").string(), "--out", (tmp / "x").string()}).code, kExitInput);

  fs::copy(fixture_path("cases"), tmp / "cases", fs::copy_options::recursive);
  fs::remove(tmp / "cases" / "add-02-thick-axial" / "gold_retrieval.json");
  auto partial = cli({"--json", "eval", "--cases", (tmp / "cases").string(), "--out", (tmp / "y").string()});
  EXPECT_EQ(partial.code, kExitOk);
  EXPECT_EQ(json::parse(partial.out)["counts"]["failed"], 1);
}

TEST(CliCaseGold, RegeneratesSegments) {
  TempDir tmp;
  fs::copy(fixture_path("cases/del-01-lungcad"), tmp / "case", fs::copy_options::recursive);
  fs::remove_all(tmp / "case" / "gold_segments");
  auto r = cli({"case-gold", (tmp / "case").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(read_text_file((tmp / "case" / "gold_segments" / "spiral-1.xml").string()),
            read_fixture("cases/del-01-lungcad/gold_segments/spiral-1.xml"));
}

TEST(CliServe, BindFailureAndBadConfig) {
  httplib::Server occupant;
  const int port = occupant.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  TempDir tmp;
  auto r = cli({"serve", "--port", std::to_string(port), "--store-dir", (tmp / "s").string()});
  EXPECT_EQ(r.code, kExitBind);
  EXPECT_NE(r.err.find("cannot bind"), std::string::npos);
  EXPECT_EQ(cli({"--config", "/nonexistent.json", "serve", "--port", "0"}).code, kExitInput);
}

TEST(CliParity, ApplyMatchesServiceForEveryCase) {
  for (const auto& entry : fs::directory_iterator(fixture_path("cases"))) {
    TempDir tmp;
    EvalCase c = load_case(entry.path());
    const std::string out = (tmp / "out.xml").string();
    std::vector<std::string> args = {"apply", (entry.path() / "protocol.xml").string()};
    if (c.request.kind == RequestInput::Kind::Json) {
      args.insert(args.end(), {"--request-json", (entry.path() / "request.json").string()});
    } else {
      args.insert(args.end(), {"--request", request_text((entry.path() / "request.txt").string())});
    }
    args.insert(args.end(), {"--script", c.script->string(), "--yes", "--out", out});
    auto r = cli(args);
    ASSERT_EQ(r.code, kExitOk) << c.id << "\n" << r.out << r.err;

    const std::string script = c.script->string();
    SessionService service({tmp / "store", {}, [script](const std::string&) {
                              return std::make_unique<ScriptedBackend>(load_script(script));
                            }});
    auto s = service.create_session(read_text_file((entry.path() / "protocol.xml").string()));
    for (const auto& p : service.submit_request(s.id, c.request)) {
      if (p.status == ProposalStatus::Pending) service.decide(s.id, p.id, Decision::Approve);
    }
    EXPECT_EQ(read_text_file(out), service.protocol_xml(s.id)) << c.id;
  }
}
