// Copyright 2026 The Archloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <sstream>

#include <gtest/gtest.h>

#include "archloop/blueprint.hpp"
#include "archloop/paths.hpp"
#include "archloop/workflow.hpp"
#include "json.hpp"
#include "support/temp_dir.hpp"

namespace {

using archloop::testing_support::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "archloop");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = archloop::cli::dispatch(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    bp_ = (tmp_.path() / "bp.json").string();
    archloop::write_file_atomic(bp_, std::string(archloop::blueprint::reference_blueprint_text()));
    alu_fails_ = write("alu_fails.json", R"({"ALU":{"lint":{"default":{"passed":false}}}})");
    alu_once_ = write("alu_once.json", R"({"ALU":{"lint":{"by_attempt":{"0":{"passed":false}}}}})");
  }

  std::string write(const std::string& name, const std::string& text) {
    fs::path p = tmp_.path() / name;
    archloop::write_file_atomic(p, text);
    return p.string();
  }
  std::string dir(const std::string& name) const { return (tmp_.path() / name).string(); }

  TempDir tmp_;
  std::string bp_;
  std::string alu_fails_;
  std::string alu_once_;
};

TEST_F(CliTest, ValidateExitCodes) {
  EXPECT_EQ(call({"validate", bp_}).code, archloop::cli::kExitOk);

  json doc = json::parse(archloop::blueprint::reference_blueprint_text());
  doc["components"][0]["dependencies"] = json::array({"NoSuchComponent"});
  std::string bad = write("bad.json", doc.dump());
  Outcome r = call({"--json", "validate", bad});
  EXPECT_EQ(r.code, archloop::cli::kExitFailed);
  json out = json::parse(r.out);
  EXPECT_FALSE(out["ok"].get<bool>());
  EXPECT_FALSE(out["diagnostics"].empty());

  EXPECT_EQ(call({"validate", write("junk.json", "{not json")}).code, archloop::cli::kExitFailed);
  EXPECT_EQ(call({"validate", dir("absent.json")}).code, archloop::cli::kExitUsage);
  EXPECT_EQ(call({"validate"}).code, archloop::cli::kExitUsage);
  EXPECT_EQ(call({"frobnicate"}).code, archloop::cli::kExitUsage);
  EXPECT_EQ(call({"validate", bp_, "--no-such-flag"}).code, archloop::cli::kExitUsage);
}

TEST_F(CliTest, PlanListsEveryUnitAfterItsDependencies) {
  Outcome r = call({"--json", "plan", bp_});
  ASSERT_EQ(r.code, 0) << r.out;
  json out = json::parse(r.out);
  ASSERT_EQ(out["units"].size(), 12u);
  std::set<std::string> seen;
  for (const auto& u : out["units"]) {
    for (const auto& d : u["deps"]) EXPECT_TRUE(seen.count(d.get<std::string>())) << u.dump();
    seen.insert(u["name"].get<std::string>());
  }
  EXPECT_EQ(out["units"].back()["name"], "system");
}

// Every command, successful or not, leaves exactly one JSON document on stdout.
TEST_F(CliTest, JsonModeAlwaysPrintsOneDocument) {
  std::string run = dir("jr");
  ASSERT_EQ(call({"--json", "run", "--blueprint", bp_, "--mock-tools", "--mock-script", alu_once_,
                  "--out", run}).code,
            archloop::cli::kExitFailed);
  std::string src = write("p.asm", "ADDI R1, R0, #5\nHALT\n");
  std::string hex = dir("p.hex");
  std::string trace = dir("p.csv");

  std::vector<std::vector<std::string>> cases = {
      {"--help"},
      {"run", "--help"},
      {},
      {"frobnicate"},
      {"validate", bp_},
      {"validate", dir("absent.json")},
      {"validate", write("half.json", R"({"projectName": 3})")},
      {"plan", bp_},
      {"plan", write("empty.txt", "")},
      {"run", "--blueprint", dir("absent.json"), "--mock-tools"},
      {"run", "--blueprint", bp_, "--mock-tools", "--backend", "nope", "--out", dir("x1")},
      {"run", "--blueprint", bp_, "--mock-tools", "--max-attempts", "0", "--out", dir("x2")},
      {"run", "--blueprint", bp_, "--mock-tools", "--max-attempts", "many"},
      {"run", "--blueprint", bp_, "--mock-tools", "--out", run},
      {"approvals", run},
      {"approvals", dir("nowhere")},
      {"decide", run, "missing", "approve"},
      {"decide", run, "jr-r1", "maybe"},
      {"decide", run, "jr-r1", "edit"},
      {"report", run},
      {"report", dir("nowhere")},
      {"asm", src, "-o", hex},
      {"asm", write("bad.asm", "FROB R1\n"), "-o", dir("bad.hex")},
      {"sim", hex, "--cycles", "8", "--trace", trace},
      {"sim", write("bad.hex", "zz\n")},
      {"diff-trace", trace, trace},
      {"diff-trace", trace, write("t.csv", "garbage")},
      {"isa-table"},
      {"isa-table", "--blueprint", dir("absent.json")},
  };
  for (auto args : cases) {
    args.insert(args.begin(), "--json");
    Outcome r = call(args);
    std::string label = ::testing::PrintToString(args);
    ASSERT_FALSE(r.out.empty()) << label;
    EXPECT_EQ(r.out.find('\n'), r.out.size() - 1) << label << "\n" << r.out;
    json doc;
    ASSERT_NO_THROW(doc = json::parse(r.out)) << label << "\n" << r.out;
    if (r.code == archloop::cli::kExitUsage) {
      EXPECT_TRUE(doc.contains("code") && doc.contains("message")) << label << "\n" << r.out;
    }
  }
}

TEST_F(CliTest, GoldenRunVerifiesWithMockTools) {
  std::string run = dir("golden");
  Outcome r = call({"--json", "run", "--blueprint", bp_, "--mock-tools", "--auto-approve", "--out", run});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  json out = json::parse(r.out);
  EXPECT_EQ(out["verdict"], "verified");
  EXPECT_EQ(out["run_id"], "golden");
  EXPECT_TRUE(fs::exists(fs::path(run) / "cli.json"));

  Outcome again = call({"run", "--blueprint", bp_, "--mock-tools", "--out", run});
  EXPECT_EQ(again.code, archloop::cli::kExitUsage);

  Outcome rep = call({"--json", "report", run});
  EXPECT_EQ(rep.code, 0);
  EXPECT_EQ(json::parse(rep.out)["verdict"], "verified");
}

TEST_F(CliTest, RetryBoundEscalates) {
  std::string run = dir("esc");
  Outcome r = call({"--json", "run", "--blueprint", bp_, "--mock-tools", "--mock-script", alu_fails_,
                    "--auto-approve", "--out", run});
  EXPECT_EQ(r.code, archloop::cli::kExitFailed);
  json out = json::parse(r.out);
  EXPECT_EQ(out["verdict"], "escalated");
  auto s = archloop::wf::load(run);
  std::size_t proposed = 0;
  for (const auto& e : s.events) proposed += e.kind == "fix_proposed" && e.unit == "ALU";
  EXPECT_EQ(proposed, 3u);
  EXPECT_EQ(archloop::wf::to_string(s.find_unit("ALU")->phase), "Escalated");
}

TEST_F(CliTest, OfflineDecisionThenResume) {
  std::string run = dir("off");
  ASSERT_EQ(call({"run", "--blueprint", bp_, "--mock-tools", "--mock-script", alu_once_, "--out", run}).code,
            archloop::cli::kExitFailed);
  json pending = json::parse(call({"--json", "approvals", run}).out)["approvals"];
  ASSERT_EQ(pending.size(), 1u);
  std::string id = pending[0]["id"];

  Outcome unknown = call({"--json", "decide", run, "off-r99", "approve"});
  EXPECT_EQ(unknown.code, archloop::cli::kExitUsage);
  EXPECT_EQ(json::parse(unknown.out)["code"], "NotFound");

  Outcome escape = call({"--json", "decide", run, id, "edit", bp_, "--path", "../outside.sv"});
  EXPECT_EQ(escape.code, archloop::cli::kExitUsage);
  EXPECT_EQ(json::parse(escape.out)["code"], "ValidationError");

  Outcome ok = call({"--json", "decide", run, id, "approve", "--note", "looks right"});
  ASSERT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(json::parse(ok.out)["phase"], "ApplyingFix");
  EXPECT_EQ(call({"--json", "decide", run, id, "approve"}).code, archloop::cli::kExitUsage);

  Outcome resumed = call({"--json", "resume", run});
  ASSERT_EQ(resumed.code, 0) << resumed.out;
  EXPECT_EQ(json::parse(resumed.out)["verdict"], "verified");
  auto s = archloop::wf::load(run);
  bool noted = false;
  for (const auto& e : s.events) noted |= e.kind == "approved" && e.payload.dump().find("looks right") != std::string::npos;
  EXPECT_TRUE(noted);
}

TEST_F(CliTest, ResumeAfterKillMatchesUninterruptedReport) {
  std::string script = write("unit_once.json", R"({"ALU":{"unit_test":{"by_attempt":{"0":{"passed":false}}}}})");
  auto run_args = [&](const std::string& out) {
    return std::vector<std::string>{"--json", "run", "--blueprint", bp_, "--mock-tools", "--mock-script",
                                    script, "--auto-approve", "--out", out};
  };
  auto report_of = [](const std::string& out) {
    json j = json::parse(out);
    j.erase("run_dir");
    return j;
  };
  Outcome whole = call(run_args(dir("whole/run")));
  ASSERT_EQ(whole.code, 0);
  for (std::string k : {"1", "3", "17", "30"}) {
    auto args = run_args(dir("k" + k + "/run"));
    args.insert(args.end(), {"--stop-after", k});
    Outcome killed = call(args);
    EXPECT_EQ(killed.code, archloop::cli::kExitFailed) << k;
    EXPECT_NE(json::parse(killed.out)["verdict"], "verified") << k;
    Outcome resumed = call({"--json", "resume", dir("k" + k + "/run")});
    EXPECT_EQ(resumed.code, 0) << k;
    EXPECT_EQ(report_of(resumed.out), report_of(whole.out)) << k;
  }
}

TEST_F(CliTest, OfflineEditIsApplied) {
  std::string run = dir("edit");
  ASSERT_EQ(call({"run", "--blueprint", bp_, "--mock-tools", "--mock-script", alu_once_, "--out", run}).code, 1);
  std::string id = json::parse(call({"--json", "approvals", run}).out)["approvals"][0]["id"];
  std::string content = "// edited by hand\nmodule ALU; endmodule\n";
  Outcome r = call({"--json", "decide", run, id, "edit", write("alu.sv", content)});
  ASSERT_EQ(r.code, 0) << r.out;
  // The edit restarts the attempt count, so the scripted first-attempt failure
  // would recur; resume with tools that pass.
  ASSERT_EQ(call({"resume", run, "--mock-script", write("none.json", "{}")}).code, 0);
  auto s = archloop::wf::load(run);
  EXPECT_NE(archloop::read_file(fs::path(run) / "workspace/components/ALU/alu.sv").find("edited by hand"),
            std::string::npos);
  bool edited = false;
  for (const auto& e : s.events) edited |= e.kind == "human_edit";
  EXPECT_TRUE(edited);
}

TEST_F(CliTest, InteractivePromptReadsDecisions) {
  std::string script = write("twice.json", R"({"ALU":{"lint":{"by_attempt":{"0":{"passed":false},"1":{"passed":false}}}}})");
  std::string run = dir("tty");
  Outcome r = call({"run", "--interactive", "--blueprint", bp_, "--mock-tools", "--mock-script", script,
                    "--out", run},
                   "maybe\nn\ny\n");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("[y]es, [n]o, [e]dit or [q]uit"), std::string::npos);
  auto s = archloop::wf::load(run);
  std::vector<std::string> kinds;
  for (const auto& e : s.events) {
    if (e.kind == "approved" || e.kind == "rejected") kinds.push_back(e.kind);
  }
  EXPECT_EQ(kinds, (std::vector<std::string>{"rejected", "approved"}));

  // End of input leaves the request pending.
  std::string run2 = dir("tty2");
  EXPECT_EQ(call({"run", "--interactive", "--blueprint", bp_, "--mock-tools", "--mock-script", script,
                  "--out", run2}).code,
            archloop::cli::kExitFailed);
  EXPECT_EQ(archloop::wf::verdict(archloop::wf::load(run2)), "awaiting_approval");
}

TEST_F(CliTest, MissingToolExitsThree) {
  std::string cfg = write("cfg.json", R"({"tools":{"lint":"archloop-no-such-linter --lint-only"}})");
  Outcome r = call({"--json", "run", "--blueprint", bp_, "--config", cfg, "--out", dir("tm")});
  EXPECT_EQ(r.code, archloop::cli::kExitToolMissing) << r.out;
  EXPECT_EQ(json::parse(r.out)["code"], "ToolMissing");
}

TEST_F(CliTest, RemoteBackendNeedsCredential) {
  std::string cfg = write("remote.json", R"({"remote":{"api_key_env":"ARCHLOOP_TEST_UNSET_KEY"}})");
  ::unsetenv("ARCHLOOP_TEST_UNSET_KEY");
  Outcome r = call({"--json", "run", "--blueprint", bp_, "--backend", "remote", "--mock-tools", "--config",
                    cfg, "--out", dir("rm")});
  EXPECT_EQ(r.code, archloop::cli::kExitUsage);
  EXPECT_EQ(json::parse(r.out)["code"], "ConfigError");
}

TEST_F(CliTest, AssembleSimulateAndCompare) {
  std::string src = write("p.asm", "ADDI R1, R0, #5\nADD R2, R1, R1\nHALT\n");
  std::string hex = dir("p.hex");
  ASSERT_EQ(call({"asm", src, "-o", hex, "--blueprint", bp_}).code, 0);
  std::string trace = dir("golden.csv");
  Outcome sim = call({"--json", "sim", hex, "--cycles", "6", "--trace", trace});
  ASSERT_EQ(sim.code, 0) << sim.out;
  json s = json::parse(sim.out);
  EXPECT_TRUE(s["halted"].get<bool>());
  EXPECT_EQ(s["regs"][1], 5);
  EXPECT_EQ(s["regs"][2], 10);

  EXPECT_EQ(call({"diff-trace", trace, trace}).code, 0);
  std::string other = dir("q.hex");
  ASSERT_EQ(call({"asm", write("q.asm", "ADDI R1, R0, #6\nADD R2, R1, R1\nHALT\n"), "-o", other}).code, 0);
  std::string dut = dir("dut.csv");
  ASSERT_EQ(call({"sim", other, "--cycles", "6", "--trace", dut}).code, 0);
  Outcome d = call({"--json", "diff-trace", trace, dut, "--hex", hex});
  EXPECT_NE(d.code, 0);
  EXPECT_TRUE(json::accept(d.out));
}

}  // namespace
