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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any check fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "archloop/blueprint.hpp"
#include "archloop/genbackend.hpp"
#include "archloop/isa.hpp"
#include "archloop/paths.hpp"
#include "archloop/sysverify.hpp"
#include "archloop/toolrunners.hpp"
#include "archloop/workflow.hpp"
#include "cli.hpp"
#include "json.hpp"
#include "support/random_programs.hpp"
#include "support/reference_interpreter.hpp"
#include "support/temp_dir.hpp"

namespace {

using namespace archloop;
using nlohmann::json;
namespace fs = std::filesystem;

struct Result {
  bool ok = false;
  std::string detail;
};

Result pass(std::string d) { return {true, std::move(d)}; }
Result fail(std::string d) { return {false, std::move(d)}; }

// ---------------------------------------------------------------------------
// Shared E2E helpers

struct Cli {
  int code;
  std::string out;
  std::string err;
};

Cli cli(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "archloop");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

testing_support::TempDir& scratch() {
  static testing_support::TempDir dir;
  return dir;
}

std::string scratch_file(const std::string& name, const std::string& text) {
  fs::path p = scratch().path() / name;
  write_file_atomic(p, text);
  return p.string();
}

const std::string& reference_blueprint_file() {
  static const std::string path =
      scratch_file("reference_blueprint.json", std::string(blueprint::reference_blueprint_text()));
  return path;
}

// Every run directory produced by the E2E checks, for the approval audit.
std::vector<fs::path>& journals() {
  static std::vector<fs::path> dirs;
  return dirs;
}

std::vector<json> read_journal(const fs::path& run_dir) {
  std::vector<json> events;
  std::istringstream in(read_file(run_dir / "events.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) events.push_back(json::parse(line));
  }
  return events;
}

std::size_t count_events(const std::vector<json>& events, const std::string& kind,
                         const std::string& unit) {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [&](const json& e) {
    return e["kind"] == kind && e["unit"] == unit;
  }));
}

// Drops wall-clock fields so two runs can be compared field by field.
json without_timestamps(json j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "ts" || (k.size() > 3 && k.compare(k.size() - 3, 3, "_at") == 0)) continue;
      out[k] = without_timestamps(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (auto& v : j) out.push_back(without_timestamps(v));
    return out;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Checks

Result golden_path() {
  fs::path dir = scratch().path() / "golden" / "run";
  auto t0 = std::chrono::steady_clock::now();
  Cli r = cli({"--json", "run", "--blueprint", reference_blueprint_file(), "--backend", "template",
               "--mock-tools", "--auto-approve", "--out", dir.string()});
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  journals().push_back(dir);
  if (r.code != 0) return fail(fmt::format("exit {}: {}{}", r.code, r.out, r.err));
  wf::RunState s = wf::load(dir);
  std::size_t components = 0;
  for (const auto& u : s.units) {
    if (u.phase != wf::Phase::kVerified) return fail(u.name + " ended " + std::string(wf::to_string(u.phase)));
    if (u.kind != wf::UnitKind::kSystem) ++components;
  }
  std::string sysverdict;
  for (const auto& e : read_journal(dir)) {
    if (e["unit"] == "system" && e["kind"] == "sysverify_passed") sysverdict = e["payload"]["sysverify"]["verdict"];
  }
  if (sysverdict != "PASS") return fail("system verification verdict '" + sysverdict + "'");
  if (!wf::is_terminal(s)) return fail("run not terminal");
  if (secs >= 60.0) return fail(fmt::format("took {:.1f} s", secs));
  return pass(fmt::format("{} component units and the system unit Verified, sysverify PASS, {:.2f} s",
                          components, secs));
}

Result retry_bound() {
  std::string script = scratch_file(
      "alu_unit_fails.json",
      R"({"ALU":{"unit_test":{"by_attempt":{"0":{"passed":false},"1":{"passed":false},"2":{"passed":false}}}}})");
  fs::path dir = scratch().path() / "retry" / "run";
  Cli r = cli({"--json", "run", "--blueprint", reference_blueprint_file(), "--mock-tools", "--mock-script",
               script, "--auto-approve", "--max-attempts", "3", "--out", dir.string()});
  journals().push_back(dir);
  if (r.code != cli::kExitFailed) return fail(fmt::format("exit {}: {}", r.code, r.err));
  wf::RunState s = wf::load(dir);
  const wf::UnitState* alu = s.find_unit("ALU");
  auto events = read_journal(dir);
  std::size_t proposed = count_events(events, "fix_proposed", "ALU");
  std::size_t failures = count_events(events, "test_failed", "ALU");
  if (alu->phase != wf::Phase::kEscalated) return fail("ALU ended " + std::string(wf::to_string(alu->phase)));
  if (proposed != 3) return fail(fmt::format("{} fix_proposed events for ALU", proposed));
  if (wf::verdict(s) != "escalated") return fail("run verdict " + wf::verdict(s));
  return pass(fmt::format("ALU Escalated after {} unit-test failures with exactly {} fix_proposed events",
                          failures, proposed));
}

Result isa_differential() {
  std::mt19937 rng(20240611);
  const std::size_t programs = 250;
  std::size_t cycles = 0;
  for (std::size_t p = 0; p < programs; ++p) {
    auto words = testing::random_program(rng, 20, /*allow_halt=*/p % 2 == 0);
    std::vector<std::uint16_t> ref_prog(words.begin(), words.end());
    isa::MemImage img{words, 0};
    testing::RefMachine ref;
    isa::ArchState st = isa::reset();
    for (std::size_t c = 0; c < 200; ++c) {
      testing::RefStatus rs = testing::ref_step(ref, ref_prog);
      bool golden_ok = true;
      try {
        st = isa::step(st, img).state;
      } catch (const isa::IsaError&) {
        golden_ok = false;
      }
      if (rs == testing::RefStatus::kFetchFault || rs == testing::RefStatus::kIllegal) {
        if (golden_ok) return fail(fmt::format("program {} cycle {}: golden model did not fault", p, c));
        break;
      }
      if (!golden_ok) return fail(fmt::format("program {} cycle {}: golden model faulted", p, c));
      ++cycles;
      if (st.pc != ref.pc) return fail(fmt::format("program {} cycle {}: pc {} vs {}", p, c, st.pc, ref.pc));
      for (std::size_t i = 0; i < 8; ++i) {
        if (st.regs[i] != ref.r[i]) {
          return fail(fmt::format("program {} cycle {}: r{} {} vs {}", p, c, i, st.regs[i], ref.r[i]));
        }
      }
      if (rs == testing::RefStatus::kHalted) {
        if (!st.halted) return fail(fmt::format("program {} cycle {}: golden model did not halt", p, c));
        break;
      }
    }
  }
  return pass(fmt::format("{} random 20-instruction programs, {} cycles, exact pc and register match",
                          programs, cycles));
}

Result register_zero() {
  std::mt19937 rng(7);
  std::size_t steps = 0;
  for (std::size_t p = 0; p < 1000; ++p) {
    std::vector<isa::Instruction> prog;
    std::uniform_int_distribution<int> zero(0, 2);
    for (std::size_t i = 0; i < 24; ++i) {
      isa::Instruction in = testing::random_instruction(rng, 24, false);
      if (zero(rng) == 0 && isa::format_of(in.op) != isa::Format::kB && in.op != isa::Op::kNop &&
          in.op != isa::Op::kStur && in.op != isa::Op::kCbz) {
        in.rd = 0;  // bias toward writes that target r0
      }
      prog.push_back(in);
    }
    isa::MemImage img;
    for (const auto& in : prog) img.words.push_back(isa::encode(in));
    isa::ArchState st = isa::reset();
    for (std::size_t c = 0; c < 64 && !st.halted; ++c) {
      try {
        st = isa::step(st, img).state;
      } catch (const isa::FetchError&) {
        break;
      }
      ++steps;
      if (st.regs[0] != 0) return fail(fmt::format("program {} cycle {}: r0 = {}", p, c, st.regs[0]));
    }
  }
  return pass(fmt::format("1000 random legal programs, r0 == 0 after all {} steps", steps));
}

Result encode_decode() {
  std::size_t encodable = 0;
  std::set<std::uint32_t> images;
  auto check = [&](const isa::Instruction& in) -> bool {
    std::uint32_t w = isa::encode(in);
    ++encodable;
    images.insert(w);
    return isa::decode(w) == in;
  };
  using isa::Instruction;
  for (isa::Op op : isa::kAllOps) {
    switch (isa::format_of(op)) {
      case isa::Format::kR:
        for (unsigned a = 0; a < 8; ++a)
          for (unsigned b = 0; b < 8; ++b)
            for (unsigned c = 0; c < 8; ++c)
              if (!check(Instruction::r(op, a, b, c))) return fail(fmt::format("R round trip {} {} {}", a, b, c));
        break;
      case isa::Format::kI:
        for (unsigned a = 0; a < 8; ++a)
          for (unsigned b = 0; b < 8; ++b)
            for (unsigned imm = 0; imm < 64; ++imm)
              if (!check(Instruction::i(op, a, b, imm))) return fail("I round trip");
        break;
      case isa::Format::kCB:
        for (unsigned a = 0; a < 8; ++a)
          for (unsigned imm = 0; imm < 64; ++imm)
            if (!check(Instruction::cbz(a, imm))) return fail("CB round trip");
        break;
      case isa::Format::kB:
        for (unsigned t = 0; t < 4096; ++t)
          if (!check(Instruction::b(t))) return fail(fmt::format("B round trip {}", t));
        break;
      case isa::Format::kZ:
        if (!check(Instruction{op})) return fail("Z round trip");
        break;
    }
  }
  if (images.size() != encodable) return fail("two instructions share an encoding");
  std::size_t decodable = 0, unassigned = 0;
  for (std::uint32_t w = 0; w < 0x10000; ++w) {
    unsigned opcode = w >> 12;
    bool assigned = std::find_if(isa::kAllOps.begin(), isa::kAllOps.end(), [&](isa::Op op) {
                      return static_cast<unsigned>(op) == opcode;
                    }) != isa::kAllOps.end();
    try {
      isa::Instruction in = isa::decode(w);
      if (!assigned) return fail(fmt::format("unassigned opcode word {:#06x} decoded", w));
      if (isa::encode(in) != w) return fail(fmt::format("word {:#06x} does not re-encode", w));
      if (!images.count(w)) return fail(fmt::format("word {:#06x} decodes but is not an encoding", w));
      ++decodable;
    } catch (const isa::DecodeError&) {
      if (!assigned) ++unassigned;
    }
  }
  if (decodable != encodable) return fail(fmt::format("{} decodable words, {} encodable", decodable, encodable));
  if (unassigned != 4 * 4096) return fail(fmt::format("{} unassigned words raised DecodeError", unassigned));
  return pass(fmt::format("{} encodings round-trip; all {} unassigned-opcode words raise DecodeError",
                          encodable, unassigned));
}

Result blueprint_mutations() {
  const json base = json::parse(blueprint::reference_blueprint_text());
  auto errors_of = [](const json& doc) {
    return blueprint::consistency_check(blueprint::parse_blueprint_json(doc));
  };
  for (const auto& d : errors_of(base)) {
    if (d.severity == blueprint::Severity::kError) return fail("reference blueprint has error " + d.code);
  }
  std::mt19937 rng(1234);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const std::size_t leaves = base["components"].size() - 1;  // the top is last
  std::map<std::string, std::function<void(json&)>> mutants = {
      {"R1", [&](json& d) {
         auto& c = d["components"][pick(leaves)];
         c["interface"][pick(c["interface"].size())]["width"] = "UNDECLARED_WIDTH";
       }},
      {"R2", [&](json& d) { d["components"][pick(leaves + 1)]["dependencies"].push_back("MissingBlock"); }},
      {"R3", [&](json& d) {
         std::size_t a = pick(leaves), b = (a + 1 + pick(leaves - 1)) % leaves;
         std::string na = d["components"][a]["name"], nb = d["components"][b]["name"];
         d["components"][a]["dependencies"].push_back(nb);
         d["components"][b]["dependencies"].push_back(na);
       }},
      {"R4", [&](json& d) {
         auto& c = d["components"][pick(leaves + 1)];
         c["interface"].push_back(c["interface"][pick(c["interface"].size())]);
       }},
      {"R5", [&](json& d) {
         json extra = d["components"][pick(leaves)];
         extra["name"] = "Detached";
         extra["file"] = "detached.sv";
         d["components"].push_back(extra);
       }},
      {"R6", [&](json& d) { d["parameters"].erase(pick(2) == 0 ? "OPCODE_WIDTH" : "INSTRUCTION_WIDTH"); }},
      {"R7", [&](json& d) {
         for (auto& c : d["components"]) {
           if (c["name"] != "ALU") continue;
           for (auto& p : c["interface"]) {
             if (p["name"] == "alu_op") p["width"] = std::vector<int>{1, 2, 4, 5}[pick(4)];
           }
         }
       }},
  };
  std::string detail;
  for (auto& [code, mutate] : mutants) {
    json doc = base;
    mutate(doc);
    auto diags = errors_of(doc);
    std::size_t hits = static_cast<std::size_t>(
        std::count_if(diags.begin(), diags.end(), [&](const auto& d) { return d.code == code; }));
    if (hits == 0) return fail(code + " mutant produced no " + code + " diagnostic");
    detail += fmt::format("{}:{} ", code, hits);
  }
  return pass("reference blueprint has no errors; mutants hit " + detail);
}

Result trace_comparison() {
  std::mt19937 rng(99);
  std::size_t trials = 0;
  while (trials < 10000) {
    auto words = testing::random_program(rng, 16, false);
    isa::MemImage img{words, 0};
    sysverify::DebugTrace trace;
    try {
      trace = sysverify::golden_trace(img, 24);
    } catch (const Error&) {
      continue;  // fetch fault: draw another program
    }
    if (trace.empty()) continue;
    if (!sysverify::compare_traces(trace, trace).empty()) return fail("identical traces diverge");
    for (int t = 0; t < 50 && trials < 10000; ++t, ++trials) {
      std::size_t k = std::uniform_int_distribution<std::size_t>(0, trace.size() - 1)(rng);
      std::size_t si = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
      std::string_view signal = sysverify::kSignals[si];
      unsigned width = si == 1 ? 16 : 8;
      std::uint32_t flip = std::uniform_int_distribution<std::uint32_t>(1, (1u << width) - 1)(rng);
      sysverify::DebugTrace dut = trace;
      std::uint32_t* field = si == 0   ? &dut[k].debug_pc_out
                             : si == 1 ? &dut[k].debug_instruction_out
                             : si == 2 ? &dut[k].debug_alu_result
                                       : &dut[k].debug_reg_write_data;
      std::uint32_t before = *field;
      *field ^= flip;
      auto divs = sysverify::compare_traces(trace, dut);
      if (divs.size() != 1) return fail(fmt::format("trial {}: {} divergences", trials, divs.size()));
      const auto& d = divs[0];
      if (d.cycle != trace[k].cycle || d.signal != signal || d.expected != before || d.actual != *field) {
        return fail(fmt::format("trial {}: got cycle {} {} for cycle {} {}", trials, d.cycle, d.signal,
                                trace[k].cycle, signal));
      }
    }
  }
  return pass("10000 single-value mutations each found as exactly one divergence at the mutated cycle and signal");
}

Result crash_safe_resume() {
  std::string script = scratch_file("alu_unit_once.json",
                                    R"({"ALU":{"unit_test":{"by_attempt":{"0":{"passed":false}}}}})");
  auto run_args = [&](const fs::path& dir) {
    return std::vector<std::string>{"--json", "run", "--blueprint", reference_blueprint_file(), "--mock-tools",
                                    "--mock-script", script, "--auto-approve", "--out", dir.string()};
  };
  fs::path whole = scratch().path() / "resume" / "whole" / "run";
  Cli base = cli(run_args(whole));
  journals().push_back(whole);
  if (base.code != 0) return fail("uninterrupted run did not verify: " + base.err);
  json expected = without_timestamps(json::parse(base.out));
  expected.erase("run_dir");
  std::size_t points = 0;
  for (std::size_t k = 1;; ++k) {
    fs::path dir = scratch().path() / "resume" / std::to_string(k) / "run";
    auto args = run_args(dir);
    args.push_back("--stop-after");
    args.push_back(std::to_string(k));
    Cli first = cli(args);
    if (first.code == 0) break;  // finished before the kill point
    Cli second = cli({"--json", "resume", dir.string()});
    journals().push_back(dir);
    ++points;
    json got = without_timestamps(json::parse(second.out));
    got.erase("run_dir");
    if (second.code != 0 || got != expected) {
      return fail(fmt::format("kill after transition {}: report differs:\n{}\n{}", k, got.dump(), expected.dump()));
    }
    if (k > 10000) return fail("run never finished");
  }
  if (points < 10) return fail(fmt::format("only {} kill points", points));
  return pass(fmt::format("{} kill points; every resumed run matches the uninterrupted report", points));
}

Result parser_fixtures() {
  const fs::path root = ARCHLOOP_FIXTURE_DIR;
  std::size_t checked = 0;
  bool width_warning = false;
  auto expected_for = [](fs::path p) {
    p.replace_extension(".expected.json");
    return json::parse(read_file(p));
  };
  for (const auto& e : fs::directory_iterator(root / "lint")) {
    if (e.path().extension() != ".log") continue;
    json want = expected_for(e.path());
    auto got = tools::LintReport::from(tools::parse_lint_log(read_file(e.path())), "");
    if (got.passed != want["passed"].get<bool>()) return fail(e.path().filename().string() + ": passed differs");
    if (got.diagnostics.size() != want["diagnostics"].size()) return fail(e.path().filename().string() + ": count differs");
    for (std::size_t i = 0; i < got.diagnostics.size(); ++i) {
      if (tools::to_json(got.diagnostics[i]) != tools::to_json(tools::diagnostic_from_json(want["diagnostics"][i]))) {
        return fail(e.path().filename().string() + fmt::format(": diagnostic {} differs", i));
      }
      if (got.diagnostics[i].tool_code == "WIDTH" && got.diagnostics[i].severity == tools::Severity::kWarning) {
        width_warning = true;
      }
    }
    ++checked;
  }
  for (const auto& e : fs::directory_iterator(root / "results")) {
    if (e.path().extension() != ".xml") continue;
    json want = expected_for(e.path());
    std::string name = e.path().filename().string();
    if (want.contains("error")) {
      try {
        (void)tools::parse_test_results(read_file(e.path()));
        return fail(name + ": expected a format error");
      } catch (const tools::FormatError&) {
      }
      ++checked;
      continue;
    }
    auto got = tools::parse_test_results(read_file(e.path()));
    if (got.passed != want["passed"].get<bool>() || got.tests_run != want["tests_run"].get<unsigned>() ||
        got.failures.size() != want["failures"].size()) {
      return fail(name + ": summary differs");
    }
    for (std::size_t i = 0; i < got.failures.size(); ++i) {
      if (got.failures[i].name != want["failures"][i]["name"] ||
          got.failures[i].message != want["failures"][i]["message"]) {
        return fail(name + fmt::format(": failure {} differs", i));
      }
    }
    ++checked;
  }
  if (checked < 10) return fail(fmt::format("only {} fixtures", checked));
  if (!width_warning) return fail("no width-warning fixture");
  return pass(fmt::format("{} fixtures reproduce their annotations, including a WIDTH warning", checked));
}

Result usage_ledger() {
  std::mt19937_64 rng(42);
  const char* models[] = {"model-a", "model-b", "model-c"};
  std::vector<gen::Usage> usages;
  std::uint64_t prompt = 0, completion = 0;
  std::map<std::string, std::uint64_t> per_model;
  for (int i = 0; i < 200; ++i) {
    gen::Usage u;
    u.model = models[rng() % 3];
    u.prompt_tokens = rng() % 5000;
    u.completion_tokens = rng() % 3000;
    prompt += u.prompt_tokens;
    completion += u.completion_tokens;
    per_model[u.model] += u.prompt_tokens + u.completion_tokens;
    usages.push_back(u);
  }
  std::optional<gen::UsageLedger> first;
  for (int perm = 0; perm < 100; ++perm) {
    std::shuffle(usages.begin(), usages.end(), rng);
    gen::UsageLedger l;
    for (const auto& u : usages) l = gen::accumulate_usage(l, u);
    if (l.prompt_tokens != prompt || l.completion_tokens != completion || l.total() != prompt + completion) {
      return fail(fmt::format("permutation {}: totals {} / {}", perm, l.prompt_tokens, l.completion_tokens));
    }
    for (const auto& [m, t] : per_model) {
      if (l.per_model.at(m).total() != t) return fail("per-model total differs for " + m);
    }
    if (first && !(*first == l)) return fail("ledger depends on order");
    if (!first) first = l;
  }
  if (wf::WorkflowConfig{}.token_budget != 1'000'000) return fail("default budget is not 1,000,000");
  gen::UsageLedger at, above;
  at = gen::accumulate_usage(at, {600'000, 400'000, "m"});
  above = gen::accumulate_usage(above, {600'000, 400'001, "m"});
  if (at.over_budget(gen::kDefaultTokenBudget)) return fail("flagged at exactly 1,000,000");
  if (!above.over_budget(gen::kDefaultTokenBudget)) return fail("not flagged at 1,000,001");
  return pass("totals equal the arithmetic sum under 100 permutations; flag at 1,000,001 and not at 1,000,000");
}

Result approval_audit() {
  // An interactive run: reject the first proposal, edit the second, approve the rest.
  std::string script = scratch_file(
      "alu_lint_thrice.json",
      R"({"ALU":{"lint":{"by_attempt":{"0":{"passed":false},"1":{"passed":false}}}},
          "Adder":{"unit_test":{"by_attempt":{"0":{"passed":false}}}}})");
  std::string edit = scratch_file("adder_edit.sv", "// reviewed\nmodule Adder; endmodule\n");
  fs::path dir = scratch().path() / "interactive" / "run";
  Cli r = cli({"run", "--interactive", "--blueprint", reference_blueprint_file(), "--mock-tools", "--mock-script",
               script, "--out", dir.string()},
              "n\ne\n" + edit + "\ny\ny\ny\ny\ny\ny\n");
  journals().push_back(dir);
  if (r.code != 0) return fail(fmt::format("interactive run exit {}: {}", r.code, r.err));
  std::size_t materialized = 0, human = 0;
  for (const fs::path& run : journals()) {
    std::set<std::string> cleared;
    std::uint64_t last = 0;
    for (const auto& e : read_journal(run)) {
      std::uint64_t seq = e["seq"].get<std::uint64_t>();
      if (seq != last + 1) return fail(run.string() + ": journal gap at " + std::to_string(seq));
      last = seq;
      const std::string kind = e["kind"];
      const json& p = e["payload"];
      if (kind == "approved" || kind == "human_edit") {
        cleared.insert(p.value("request_id", ""));
        if (!p.value("auto", false)) ++human;
      } else if (kind == "fix_applied") {
        ++materialized;
        if (!cleared.count(p.value("request_id", ""))) {
          return fail(fmt::format("{}: fix_applied at seq {} without an earlier approval", run.string(), seq));
        }
      }
    }
  }
  if (materialized == 0) return fail("no fix was materialized");
  if (human < 2) return fail("the interactive run recorded no human decisions");
  return pass(fmt::format("{} journals, {} fix_applied events each preceded by approved or human_edit",
                          journals().size(), materialized));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Result (*)()>> checks = {
      {"golden-path-e2e", golden_path},
      {"retry-bound-e2e", retry_bound},
      {"isa-differential", isa_differential},
      {"register-zero-invariant", register_zero},
      {"encode-decode-bijection", encode_decode},
      {"blueprint-mutation-suite", blueprint_mutations},
      {"trace-comparison", trace_comparison},
      {"crash-safe-resume", crash_safe_resume},
      {"parser-fixtures", parser_fixtures},
      {"usage-ledger", usage_ledger},
      {"approval-audit", approval_audit},
  };
  int failed = 0;
  for (const auto& [name, check] : checks) {
    Result r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = fail(std::string("exception: ") + e.what());
    }
    std::cout << (r.ok ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
    failed += !r.ok;
  }
  return failed == 0 ? 0 : 1;
}
