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

#include <atomic>
#include <csignal>
#include <iostream>
#include <optional>
#include <thread>

#include <fmt/format.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "archloop/assembler.hpp"
#include "archloop/blueprint.hpp"
#include "archloop/genbackend.hpp"
#include "archloop/hex.hpp"
#include "archloop/isa.hpp"
#include "archloop/paths.hpp"
#include "archloop/service.hpp"
#include "archloop/sysverify.hpp"
#include "archloop/toolrunners.hpp"
#include "archloop/workflow.hpp"

namespace archloop::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

// Where a command's output goes. With --json stdout carries exactly one
// JSON document, errors included.
struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool as_json = false;

  void result(const json& doc, const std::string& text) {
    if (as_json) {
      out << doc.dump() << "\n";
    } else {
      out << text;
      if (!text.empty() && text.back() != '\n') out << "\n";
    }
  }
  void error(const std::string& code, const std::string& message,
             const nlohmann::json& extra = nlohmann::json::object()) {
    if (as_json) {
      nlohmann::json e = {{"code", code}, {"message", message}};
      for (auto it = extra.begin(); it != extra.end(); ++it) e[it.key()] = it.value();
      out << e.dump() << "\n";
    } else {
      err << "error: " << code << ": " << message << "\n";
    }
  }
};

// ---------------------------------------------------------------------------
// Settings shared by run and resume, persisted next to the run.

struct ExecSettings {
  std::string backend = "template";
  bool mock_tools = false;
  std::string mock_script;
  std::string replay_dir;
  std::string record_dir;
  std::string config;

  json to_json() const {
    return {{"backend", backend},       {"mock_tools", mock_tools}, {"mock_script", mock_script},
            {"replay_dir", replay_dir}, {"record_dir", record_dir}, {"config", config}};
  }
  static ExecSettings from_json(const json& j) {
    ExecSettings s;
    s.backend = j.value("backend", s.backend);
    s.mock_tools = j.value("mock_tools", false);
    s.mock_script = j.value("mock_script", "");
    s.replay_dir = j.value("replay_dir", "");
    s.record_dir = j.value("record_dir", "");
    s.config = j.value("config", "");
    return s;
  }
};

std::string absolute(const std::string& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

json read_json_file(const std::string& path, const char* what) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{} {} is not valid JSON: {}", what, path, e.what()));
  }
}

json config_doc(const ExecSettings& st) {
  return st.config.empty() ? json::object() : read_json_file(st.config, "config file");
}

wf::WorkflowConfig workflow_config(const json& doc) {
  return wf::workflow_config_from_json(doc);
}

struct Executors {
  std::shared_ptr<gen::Backend> backend;
  std::shared_ptr<tools::ToolRunner> runner;
};

Executors build_executors(const ExecSettings& st, const wf::WorkflowConfig& cfg,
                          const json& doc) {
  Executors ex;
  if (st.backend == "template") {
    ex.backend = std::make_shared<gen::TemplateBackend>(cfg.route);
  } else if (st.backend == "replay") {
    if (st.replay_dir.empty()) throw ConfigError("--backend replay needs --replay-dir");
    ex.backend = std::make_shared<gen::ReplayBackend>(gen::FixtureStore(st.replay_dir));
  } else if (st.backend == "remote") {
    gen::RemoteConfig rc = gen::remote_config_from_json(doc.value("remote", json::object()));
    if (!doc.contains("remote") || !doc["remote"].contains("routes")) rc.route = cfg.route;
    if (!rc.api_key_env.empty() && std::getenv(rc.api_key_env.c_str()) == nullptr) {
      throw ConfigError("the remote backend needs the credential in $" + rc.api_key_env);
    }
    ex.backend = std::make_shared<gen::RemoteBackend>(rc);
  } else {
    throw ConfigError("unknown backend '" + st.backend + "' (remote, template or replay)");
  }
  if (!st.record_dir.empty()) {
    ex.backend = std::make_shared<gen::RecordingBackend>(ex.backend, gen::FixtureStore(st.record_dir));
  }
  if (st.mock_tools) {
    json script = st.mock_script.empty() ? json::object() : read_json_file(st.mock_script, "mock script");
    ex.runner = std::make_shared<tools::MockRunner>(tools::MockRunner::Mode::kAlwaysPass, script);
  } else {
    tools::ToolCommands cmds;
    cmds.lint_timeout = std::chrono::seconds(cfg.lint_timeout_s);
    cmds.test_timeout = std::chrono::seconds(cfg.test_timeout_s);
    if (doc.contains("tools")) cmds = tools::tool_commands_from_json(doc["tools"], cmds);
    tools::require_tool(cmds.lint);
    tools::require_tool(cmds.test);
    tools::require_tool(cmds.system_test);
    ex.runner = std::make_shared<tools::SubprocessRunner>(cmds);
  }
  return ex;
}

isa::IsaConfig isa_config(const std::string& blueprint_path) {
  if (blueprint_path.empty()) return {};
  auto bp = blueprint::parse_blueprint(read_file(blueprint_path));
  return isa::IsaConfig::from_parameters(bp.parameters);
}

// ---------------------------------------------------------------------------
// Interactive approvals

std::optional<wf::input::Decision> prompt_decision(const wf::RunState& s, Io& io) {
  auto pending = wf::pending_approvals(s);
  if (pending.empty()) return std::nullopt;
  const wf::ApprovalRequest& r = *pending.front();
  const wf::UnitState& u = *s.find_unit(r.unit);
  std::ostream& o = io.err;
  o << fmt::format("\napproval {} for {} ({}, attempt {}/{}){}\n", r.id, r.unit, r.stage, r.attempt,
                   s.config.max_attempts, r.manual ? " [attempt limit reached]" : "");
  std::size_t shown = 0;
  for (const auto& d : r.diagnostics) {
    if (shown++ == 5) break;
    o << "  " << (d.is_object() ? d.value("message", d.dump()) : d.dump()) << "\n";
  }
  for (const auto& f : r.proposed_fix) o << f.diff;
  for (;;) {
    o << (r.manual ? (r.proposed_fix.empty() ? "[e]dit or [q]uit: " : "[y]es, [e]dit or [q]uit: ")
                   : "[y]es, [n]o, [e]dit or [q]uit: ");
    o.flush();
    std::string line;
    if (!std::getline(io.in, line)) return std::nullopt;
    wf::input::Decision d;
    d.request_id = r.id;
    if ((line == "y" || line == "yes") && !r.proposed_fix.empty()) {
      d.verdict = wf::input::Decision::Verdict::kApprove;
      return d;
    }
    if ((line == "n" || line == "no") && !r.manual) {
      d.verdict = wf::input::Decision::Verdict::kReject;
      return d;
    }
    if (line == "q" || line == "quit") return std::nullopt;
    if (line == "e" || line == "edit") {
      std::string target = wf::fix_target(s, u);
      o << "file with the new content of " << target << ": ";
      o.flush();
      std::string src;
      if (!std::getline(io.in, src)) return std::nullopt;
      try {
        wf::ProposedFile f;
        f.path = target;
        f.content = read_file(src);
        d.verdict = wf::input::Decision::Verdict::kEdit;
        d.files = {f};
        return d;
      } catch (const Error& e) {
        o << e.what() << "\n";
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Commands

int finish_run(const wf::RunState& s, const fs::path& dir, Io& io) {
  json doc = wf::report_json(s);
  doc["run_dir"] = dir.string();
  io.result(doc, wf::report_text(s) + "run directory " + dir.string() + "\n");
  return wf::verdict(s) == "verified" ? kExitOk : kExitFailed;
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
  std::string host = "127.0.0.1";
  std::string port = addr;
  if (auto pos = addr.rfind(':'); pos != std::string::npos) {
    if (pos > 0) host = addr.substr(0, pos);
    port = addr.substr(pos + 1);
  }
  try {
    std::size_t used = 0;
    int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range(port);
    return {host, p};
  } catch (const std::exception&) {
    throw ConfigError("bad --serve address '" + addr + "' (want HOST:PORT)");
  }
}

int serve_run(const fs::path& dir, const std::string& run_id, const Executors& ex,
              const std::string& addr, const std::string& token, Io& io) {
  service::ServiceOptions so;
  so.runs_root = dir.parent_path();
  so.token = token;
  so.backend = ex.backend;
  so.runner = ex.runner;
  service::Service svc(so);
  auto [host, port] = parse_addr(addr);
  int bound = svc.bind(host, port);
  svc.start();
  io.err << fmt::format("serving run {} on http://{}:{}{}\n", run_id, host, bound,
                        token.empty() ? " (no token)" : "");
  svc.host(run_id);
  g_interrupted = false;
  auto old_int = std::signal(SIGINT, on_signal);
  auto old_term = std::signal(SIGTERM, on_signal);
  while (!g_interrupted) {
    if (svc.wait_for(run_id, [](const wf::RunState& s) { return wf::verdict(s) == "verified"; },
                     std::chrono::milliseconds(200))) {
      break;
    }
  }
  std::signal(SIGINT, old_int);
  std::signal(SIGTERM, old_term);
  svc.stop();
  return finish_run(wf::load(dir), dir, io);
}

struct RunArgs {
  std::string blueprint;
  std::string out;
  ExecSettings exec;
  bool auto_approve = false;
  bool interactive = false;
  std::optional<unsigned> max_attempts;
  std::string serve;
  std::string token;
  std::optional<std::size_t> stop_after;
};

int drive(wf::RunState s, const fs::path& dir, const Executors& ex, const RunArgs& a, Io& io) {
  if (!a.serve.empty()) {
    std::string token = a.token;
    if (const char* env = std::getenv("ARCHLOOP_TOKEN"); token.empty() && env != nullptr) token = env;
    return serve_run(dir, dir.filename().string(), ex, a.serve, token, io);
  }
  wf::RunOptions opts;
  opts.stop_after_transitions = a.stop_after;
  bool interactive = a.interactive || (!s.config.auto_approve && !io.as_json && ::isatty(0));
  if (interactive) {
    opts.scripted = [&io](const wf::RunState& st) { return prompt_decision(st, io); };
  }
  s = wf::run_to_completion(std::move(s), {ex.backend.get(), ex.runner.get()}, dir, opts);
  return finish_run(s, dir, io);
}

int cmd_run(RunArgs a, Io& io) {
  a.exec.config = absolute(a.exec.config);
  a.exec.mock_script = absolute(a.exec.mock_script);
  a.exec.replay_dir = absolute(a.exec.replay_dir);
  a.exec.record_dir = absolute(a.exec.record_dir);
  json doc = config_doc(a.exec);
  wf::WorkflowConfig cfg = workflow_config(doc);
  if (a.auto_approve) cfg.auto_approve = true;
  if (a.max_attempts) cfg.max_attempts = *a.max_attempts;
  if (doc.contains("backend") && a.exec.backend.empty()) a.exec.backend = cfg.backend;
  if (a.exec.backend.empty()) a.exec.backend = "template";
  cfg.backend = a.exec.backend;
  wf::validate(cfg);
  Executors ex = build_executors(a.exec, cfg, doc);

  auto bp = blueprint::parse_blueprint(read_file(a.blueprint));
  std::string run_id;
  fs::path dir;
  if (a.out.empty()) {
    run_id = wf::make_run_id(bp.project_name);
    dir = fs::path("runs") / run_id;
  } else {
    dir = fs::absolute(a.out).lexically_normal();
    if (dir.filename().empty()) dir = dir.parent_path();
    run_id = dir.filename().string();
    if (!is_safe_relative_path(run_id)) throw ConfigError("bad --out directory '" + a.out + "'");
  }
  dir = fs::absolute(dir).lexically_normal();
  std::error_code ec;
  if (fs::exists(dir / "state.json", ec)) {
    throw ConfigError("run directory " + dir.string() + " already holds a run; use resume");
  }
  wf::RunState s = wf::plan_run(bp, cfg, run_id, wf::now_ms());
  wf::persist(s, dir);
  write_file_atomic(dir / "cli.json", a.exec.to_json().dump(2) + "\n");
  io.err << "run " << run_id << " in " << dir.string() << "\n";
  return drive(std::move(s), dir, ex, a, io);
}

int cmd_resume(const std::string& dir_arg, RunArgs a, Io& io) {
  fs::path dir = fs::absolute(dir_arg).lexically_normal();
  wf::RunState s = wf::load(dir);
  ExecSettings saved;
  std::error_code ec;
  if (fs::exists(dir / "cli.json", ec)) saved = ExecSettings::from_json(read_json_file((dir / "cli.json").string(), "run settings"));
  if (!a.exec.backend.empty()) saved.backend = a.exec.backend;
  if (a.exec.mock_tools) saved.mock_tools = true;
  if (!a.exec.mock_script.empty()) saved.mock_script = absolute(a.exec.mock_script);
  if (!a.exec.replay_dir.empty()) saved.replay_dir = absolute(a.exec.replay_dir);
  if (!a.exec.record_dir.empty()) saved.record_dir = absolute(a.exec.record_dir);
  if (!a.exec.config.empty()) saved.config = absolute(a.exec.config);
  json doc = config_doc(saved);
  if (a.auto_approve) s.config.auto_approve = true;
  Executors ex = build_executors(saved, s.config, doc);
  write_file_atomic(dir / "cli.json", saved.to_json().dump(2) + "\n");
  return drive(std::move(s), dir, ex, a, io);
}

int cmd_validate(const std::string& path, Io& io) {
  std::string text = read_file(path);
  std::vector<blueprint::BlueprintDiagnostic> diags;
  try {
    diags = blueprint::consistency_check(blueprint::parse_blueprint(text));
  } catch (const blueprint::ParseError& e) {
    io.result({{"ok", false}, {"parse_error", {{"code", e.code()}, {"message", e.what()}}},
               {"diagnostics", json::array()}},
              std::string("parse error: ") + e.what() + "\n");
    return kExitFailed;
  }
  json list = json::array();
  std::string text_out;
  std::size_t errors = 0;
  for (const auto& d : diags) {
    list.push_back(blueprint::to_json(d));
    if (d.severity == blueprint::Severity::kError) ++errors;
    text_out += fmt::format("{} {} {}: {}\n", d.code, blueprint::to_string(d.severity),
                            d.component.value_or("-"), d.message);
  }
  text_out += fmt::format("{} error(s), {} warning(s)\n", errors, diags.size() - errors);
  io.result({{"ok", errors == 0}, {"diagnostics", list}}, text_out);
  return errors == 0 ? kExitOk : kExitFailed;
}

int cmd_plan(const std::string& path, Io& io) {
  auto bp = blueprint::parse_blueprint(read_file(path));
  wf::RunState s;
  try {
    s = wf::plan_run(bp, {}, "plan", 0);
  } catch (const wf::PlanError& e) {
    json diags = json::array();
    for (const auto& d : e.diagnostics()) diags.push_back(blueprint::to_json(d));
    io.error(e.code(), e.what(), {{"diagnostics", diags}});
    return kExitFailed;
  }
  json units = json::array();
  std::string text = "dependency order:\n";
  std::size_t n = 0;
  for (const auto& name : blueprint::dependency_order(bp)) text += fmt::format("  {:>2}. {}\n", ++n, name);
  text += "units:\n";
  for (const auto& u : s.units) {
    units.push_back({{"name", u.name}, {"kind", wf::to_string(u.kind)}, {"deps", u.deps}});
    text += fmt::format("  {} ({}){}\n", u.name, wf::to_string(u.kind),
                        u.deps.empty() ? "" : " after " + fmt::format("{}", fmt::join(u.deps, ", ")));
  }
  io.result({{"order", blueprint::dependency_order(bp)}, {"units", units}}, text);
  return kExitOk;
}

int cmd_approvals(const std::string& dir, Io& io) {
  wf::RunState s = wf::load(dir);
  json list = json::array();
  std::string text;
  for (const auto* r : wf::pending_approvals(s)) {
    list.push_back(wf::to_json(*r));
    text += fmt::format("{}  {}  {}  attempt {}/{}{}\n", r->id, r->unit, r->stage, r->attempt,
                        s.config.max_attempts, r->manual ? "  escalated" : "");
    for (const auto& f : r->proposed_fix) text += f.diff;
  }
  if (list.empty()) text = "no pending approvals\n";
  io.result({{"run_id", s.run_id}, {"approvals", list}}, text);
  return kExitOk;
}

int cmd_decide(const std::string& dir_arg, const std::string& request, const std::string& verdict,
               const std::string& file, const std::string& path, const std::string& note, Io& io) {
  fs::path dir(dir_arg);
  wf::RunState s = wf::load(dir);
  auto v = wf::verdict_from_string(verdict);
  if (!v) throw ValidationError("verdict must be approve, reject or edit, not '" + verdict + "'");
  const wf::ApprovalRequest* r = s.find_request(request);
  if (r == nullptr) throw wf::UnknownRequestError(request);
  wf::input::Decision d;
  d.request_id = request;
  d.verdict = *v;
  d.note = note;
  if (*v == wf::input::Decision::Verdict::kEdit) {
    if (file.empty()) throw ValidationError("edit needs a FILE with the new content");
    wf::ProposedFile f;
    f.path = path.empty() ? wf::fix_target(s, *s.find_unit(r->unit)) : path;
    if (!is_safe_relative_path(f.path)) {
      throw ValidationError("edit path escapes the run workspace: '" + f.path + "'");
    }
    f.content = read_file(file);
    d.files = wf::describe_files(tools::Workspace(wf::workspace_dir(dir)), {f});
  }
  std::string unit = r->unit;
  s = wf::advance(s, d, wf::now_ms()).state;
  wf::persist(s, dir);
  const wf::UnitState& u = *s.find_unit(unit);
  io.result({{"ok", true},
             {"request_id", request},
             {"seq", s.events.back().seq},
             {"unit", unit},
             {"phase", wf::to_string(u.phase)}},
            fmt::format("{} recorded as event {}; {} is now {} (continue with resume)\n", verdict,
                        s.events.back().seq, unit, wf::to_string(u.phase)));
  return kExitOk;
}

int cmd_asm(const std::string& src, const std::string& out, const std::string& bp, Io& io) {
  isa::IsaConfig cfg = isa_config(bp);
  isa::MemImage img = isa::assemble(read_file(src), cfg);
  write_file_atomic(out, isa::emit_hex(img, cfg));
  io.result({{"output", out}, {"words", img.words.size()}},
            fmt::format("wrote {} word(s) to {}\n", img.words.size(), out));
  return kExitOk;
}

int cmd_sim(const std::string& hex, std::uint64_t cycles, const std::string& trace_out,
            const std::string& bp, bool pad, Io& io) {
  isa::IsaConfig cfg = isa_config(bp);
  isa::MemImage img = isa::load_hex(read_file(hex), cfg);
  isa::RunResult run = isa::run(img, cycles, cfg);
  sysverify::GoldenOptions go;
  go.pad_after_halt = pad;
  auto trace = sysverify::golden_trace(img, cycles, cfg, go);
  if (!trace_out.empty()) write_file_atomic(trace_out, sysverify::emit_trace(trace, cfg));
  std::string text = fmt::format("{} cycle(s){}, pc {:#x}\n", run.trace.size(),
                                 run.state.halted ? ", halted" : "", run.state.pc);
  for (std::size_t i = 0; i < run.state.regs.size(); ++i) {
    text += fmt::format("  R{} = {:#x}\n", i, run.state.regs[i]);
  }
  if (!trace_out.empty()) text += fmt::format("trace ({} records) written to {}\n", trace.size(), trace_out);
  io.result({{"cycles", run.trace.size()},
             {"halted", run.state.halted},
             {"pc", run.state.pc},
             {"regs", run.state.regs},
             {"trace", trace_out.empty() ? json(nullptr) : json(trace_out)},
             {"trace_records", trace.size()}},
            text);
  return kExitOk;
}

int cmd_diff_trace(const std::string& expected_path, const std::string& actual_path,
                   const std::string& hex, const std::string& bp, Io& io) {
  isa::IsaConfig cfg = isa_config(bp);
  auto expected = sysverify::load_trace(read_file(expected_path), cfg);
  auto actual = sysverify::load_trace(read_file(actual_path), cfg);
  auto divs = sysverify::compare_traces(expected, actual);
  std::optional<isa::MemImage> img;
  if (!hex.empty()) img = isa::load_hex(read_file(hex), cfg);
  sysverify::ReportContext ctx{&expected, &actual, img ? &*img : nullptr, cfg};
  auto rep = sysverify::report(divs, ctx);
  io.result(rep.json, rep.text);
  return divs.empty() ? kExitOk : kExitFailed;
}

int cmd_report(const std::string& dir, Io& io) {
  wf::RunState s = wf::load(dir);
  io.result(wf::report_json(s), wf::report_text(s));
  return kExitOk;
}

int cmd_isa_table(const std::string& bp, Io& io) {
  json t = isa::isa_table_json(isa_config(bp));
  io.result(t, t.dump(2));
  return kExitOk;
}

bool wants_json(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::string_view(argv[i]) == "--json") return true;
  }
  return false;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err) {
  Io io{in, out, err, wants_json(argc, argv)};
  CLI::App app{"Blueprint-driven HDL generation and verification loop", "archloop"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json_flag = false;
  app.add_flag("--json", json_flag, "Print one JSON document on stdout");

  std::string path, dir, request, verdict, file, edit_path, note, src, out_file, bp_file, hex,
      trace_out, expected, actual;
  std::uint64_t cycles = 64;
  bool pad = false;
  RunArgs run_args;
  run_args.exec.backend.clear();

  auto* validate = app.add_subcommand("validate", "Check a blueprint for consistency errors");
  validate->add_option("blueprint", path, "Blueprint JSON")->required();

  auto* plan = app.add_subcommand("plan", "Print the dependency order and run units");
  plan->add_option("blueprint", path, "Blueprint JSON")->required();

  auto add_exec = [&](CLI::App* c) {
    c->add_option("--backend", run_args.exec.backend, "remote, template or replay");
    c->add_option("--replay-dir", run_args.exec.replay_dir, "Fixture directory for replay");
    c->add_option("--record-dir", run_args.exec.record_dir, "Record generations into this directory");
    c->add_flag("--mock-tools", run_args.exec.mock_tools, "Use the offline tool runner");
    c->add_option("--mock-script", run_args.exec.mock_script, "Scripted mock tool outcomes (JSON)");
    c->add_option("--config", run_args.exec.config, "Configuration file (JSON)");
    c->add_flag("--auto-approve", run_args.auto_approve, "Apply proposed fixes without review");
    c->add_flag("--interactive", run_args.interactive, "Prompt for approvals on the terminal");
    c->add_option("--serve", run_args.serve, "Serve the HTTP API on HOST:PORT while running");
    c->add_option("--token", run_args.token, "Bearer token for --serve");
    c->add_option("--stop-after", run_args.stop_after,
                  "Exit as if killed after N persisted transitions (testing)")
        ->group("Testing");
  };
  auto* run = app.add_subcommand("run", "Plan and run a blueprint");
  run->add_option("--blueprint", run_args.blueprint, "Blueprint JSON")->required();
  run->add_option("--out", run_args.out, "Run directory");
  run->add_option("--max-attempts", run_args.max_attempts, "Fix attempts per unit");
  add_exec(run);

  auto* resume = app.add_subcommand("resume", "Continue a persisted run");
  resume->add_option("dir", dir, "Run directory")->required();
  add_exec(resume);

  auto* approvals = app.add_subcommand("approvals", "List pending approvals");
  approvals->add_option("dir", dir, "Run directory")->required();

  auto* decide = app.add_subcommand("decide", "Approve, reject or edit a pending request");
  decide->add_option("dir", dir, "Run directory")->required();
  decide->add_option("request", request, "Request id")->required();
  decide->add_option("verdict", verdict, "approve, reject or edit")->required();
  decide->add_option("file", file, "New content (edit)");
  decide->add_option("--path", edit_path, "Workspace path the edit replaces");
  decide->add_option("--note", note, "Note recorded with the decision");

  auto* asm_cmd = app.add_subcommand("asm", "Assemble a program to a hex image");
  asm_cmd->add_option("source", src, "Assembly source")->required();
  asm_cmd->add_option("-o,--output", out_file, "Hex output")->required();
  asm_cmd->add_option("--blueprint", bp_file, "Take ISA widths from a blueprint");

  auto* sim = app.add_subcommand("sim", "Run the golden model on a hex image");
  sim->add_option("hex", hex, "Hex image")->required();
  sim->add_option("--cycles", cycles, "Cycles to simulate");
  sim->add_option("--trace", trace_out, "Write the debug trace CSV here");
  sim->add_option("--blueprint", bp_file, "Take ISA widths from a blueprint");
  sim->add_flag("--pad-after-halt", pad, "Repeat the halted state up to --cycles");

  auto* diff = app.add_subcommand("diff-trace", "Compare two debug traces");
  diff->add_option("expected", expected, "Golden trace CSV")->required();
  diff->add_option("actual", actual, "DUT trace CSV")->required();
  diff->add_option("--hex", hex, "Program image for decoding the first divergence");
  diff->add_option("--blueprint", bp_file, "Take ISA widths from a blueprint");

  auto* report = app.add_subcommand("report", "Summarize a run");
  report->add_option("dir", dir, "Run directory")->required();

  auto* table = app.add_subcommand("isa-table", "Print the instruction encoding table");
  table->add_option("--blueprint", bp_file, "Take ISA widths from a blueprint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    io.result({{"help", app.help()}}, app.help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    io.result({{"help", app.help("", CLI::AppFormatMode::All)}}, app.help("", CLI::AppFormatMode::All));
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    io.error("UsageError", e.what());
    return kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(path, io);
    if (*plan) return cmd_plan(path, io);
    if (*run) return cmd_run(run_args, io);
    if (*resume) return cmd_resume(dir, run_args, io);
    if (*approvals) return cmd_approvals(dir, io);
    if (*decide) return cmd_decide(dir, request, verdict, file, edit_path, note, io);
    if (*asm_cmd) return cmd_asm(src, out_file, bp_file, io);
    if (*sim) return cmd_sim(hex, cycles, trace_out, bp_file, pad, io);
    if (*diff) return cmd_diff_trace(expected, actual, hex, bp_file, io);
    if (*report) return cmd_report(dir, io);
    if (*table) return cmd_isa_table(bp_file, io);
  } catch (const tools::ToolMissingError& e) {
    io.error(e.code(), e.what(), {{"tool", e.tool()}});
    return kExitToolMissing;
  } catch (const wf::PlanError& e) {
    json diags = json::array();
    for (const auto& d : e.diagnostics()) diags.push_back(blueprint::to_json(d));
    io.error(e.code(), e.what(), {{"diagnostics", diags}});
    return kExitUsage;
  } catch (const Error& e) {
    io.error(e.code(), e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    io.error("Internal", e.what());
    return kExitUsage;
  }
  io.error("UsageError", "no subcommand");
  return kExitUsage;
}

}  // namespace archloop::cli
