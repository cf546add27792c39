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

#include "archloop/workflow.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "archloop/paths.hpp"
#include "archloop/textdiff.hpp"

namespace archloop::wf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kPending: return "Pending";
    case Phase::kGenerating: return "Generating";
    case Phase::kLinting: return "Linting";
    case Phase::kTesting: return "Testing";
    case Phase::kAwaitingApproval: return "AwaitingApproval";
    case Phase::kApplyingFix: return "ApplyingFix";
    case Phase::kVerified: return "Verified";
    case Phase::kEscalated: return "Escalated";
  }
  return "Pending";
}

Phase phase_from_string(std::string_view s) {
  for (Phase p : kAllPhases) {
    if (to_string(p) == s) return p;
  }
  throw ValidationError("unknown phase '" + std::string(s) + "'");
}

const std::vector<std::pair<Phase, Phase>>& legal_transitions() {
  static const std::vector<std::pair<Phase, Phase>> table = {
      {Phase::kPending, Phase::kGenerating},
      {Phase::kGenerating, Phase::kLinting},
      {Phase::kLinting, Phase::kTesting},
      {Phase::kLinting, Phase::kAwaitingApproval},
      {Phase::kTesting, Phase::kVerified},
      {Phase::kTesting, Phase::kAwaitingApproval},
      {Phase::kAwaitingApproval, Phase::kApplyingFix},
      {Phase::kAwaitingApproval, Phase::kEscalated},
      {Phase::kAwaitingApproval, Phase::kLinting},
      {Phase::kApplyingFix, Phase::kLinting},
      {Phase::kEscalated, Phase::kLinting},
  };
  return table;
}

bool is_legal_transition(Phase from, Phase to) {
  const auto& t = legal_transitions();
  return std::find(t.begin(), t.end(), std::make_pair(from, to)) != t.end();
}

std::string_view to_string(UnitKind k) {
  switch (k) {
    case UnitKind::kComponent: return "component";
    case UnitKind::kIntegration: return "integration";
    case UnitKind::kSystem: return "system";
  }
  return "component";
}

namespace {

UnitKind unit_kind_from_string(std::string_view s) {
  for (UnitKind k : {UnitKind::kComponent, UnitKind::kIntegration, UnitKind::kSystem}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown unit kind '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Action::Kind k) {
  switch (k) {
    case Action::Kind::kRequestGeneration: return "RequestGeneration";
    case Action::Kind::kIntegrate: return "Integrate";
    case Action::Kind::kRunLint: return "RunLint";
    case Action::Kind::kRunTests: return "RunTests";
    case Action::Kind::kRunSystemVerify: return "RunSystemVerify";
    case Action::Kind::kApplyFix: return "ApplyFix";
    case Action::Kind::kAwaitHuman: return "AwaitHuman";
    case Action::Kind::kDone: return "Done";
  }
  return "Done";
}

std::optional<input::Decision::Verdict> verdict_from_string(std::string_view s) {
  using V = input::Decision::Verdict;
  if (s == "approve") return V::kApprove;
  if (s == "reject") return V::kReject;
  if (s == "edit") return V::kEdit;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config and JSON

void validate(const WorkflowConfig& c) {
  if (c.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (c.max_parallel < 1) throw ConfigError("max_parallel must be at least 1");
  if (c.lint_timeout_s < 1 || c.test_timeout_s < 1) {
    throw ConfigError("tool timeouts must be at least 1 second");
  }
  if (c.sysverify_cycles < 1) throw ConfigError("sysverify_cycles must be at least 1");
}

json to_json(const WorkflowConfig& c) {
  return {{"max_attempts", c.max_attempts},     {"auto_approve", c.auto_approve},
          {"token_budget", c.token_budget},     {"max_parallel", c.max_parallel},
          {"backend", c.backend},               {"route", gen::to_json(c.route)},
          {"lint_timeout_s", c.lint_timeout_s}, {"test_timeout_s", c.test_timeout_s},
          {"sysverify_cycles", c.sysverify_cycles}, {"program", c.program}};
}

WorkflowConfig workflow_config_from_json(const json& j, WorkflowConfig base) {
  if (!j.is_object()) throw ConfigError("workflow configuration must be an object");
  static const std::set<std::string> known = {
      "max_attempts", "auto_approve",   "token_budget",   "max_parallel",
      "backend",      "route",          "lint_timeout_s", "test_timeout_s",
      "sysverify_cycles", "program",    "tools",          "remote"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("unknown configuration key '" + it.key() + "'");
  }
  try {
    if (j.contains("max_attempts")) base.max_attempts = j["max_attempts"].get<unsigned>();
    if (j.contains("auto_approve")) base.auto_approve = j["auto_approve"].get<bool>();
    if (j.contains("token_budget")) base.token_budget = j["token_budget"].get<std::uint64_t>();
    if (j.contains("max_parallel")) base.max_parallel = j["max_parallel"].get<unsigned>();
    if (j.contains("backend")) base.backend = j["backend"].get<std::string>();
    if (j.contains("route")) base.route = gen::model_route_from_json(j["route"], base.route);
    if (j.contains("lint_timeout_s")) base.lint_timeout_s = j["lint_timeout_s"].get<unsigned>();
    if (j.contains("test_timeout_s")) base.test_timeout_s = j["test_timeout_s"].get<unsigned>();
    if (j.contains("sysverify_cycles")) {
      base.sysverify_cycles = j["sysverify_cycles"].get<std::uint64_t>();
    }
    if (j.contains("program")) base.program = j["program"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad workflow configuration: ") + e.what());
  }
  validate(base);
  return base;
}

json to_json(const Event& e) {
  return {{"seq", e.seq}, {"ts", e.ts}, {"kind", e.kind}, {"unit", e.unit}, {"payload", e.payload}};
}

Event event_from_json(const json& j) {
  Event e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.ts = j.at("ts").get<std::int64_t>();
  e.kind = j.at("kind").get<std::string>();
  e.unit = j.value("unit", "");
  e.payload = j.value("payload", json::object());
  return e;
}

json to_json(const ProposedFile& f) {
  return {{"path", f.path}, {"content", f.content}, {"is_new", f.is_new}, {"diff", f.diff}};
}

ProposedFile proposed_file_from_json(const json& j) {
  ProposedFile f;
  f.path = j.at("path").get<std::string>();
  f.content = j.at("content").get<std::string>();
  f.is_new = j.value("is_new", false);
  f.diff = j.value("diff", "");
  return f;
}

json to_json(const ApprovalRequest& r) {
  json fix = json::array();
  for (const auto& f : r.proposed_fix) fix.push_back(to_json(f));
  return {{"id", r.id},          {"unit", r.unit},         {"stage", r.stage},
          {"diagnostics", r.diagnostics}, {"proposed_fix", fix}, {"created_at", r.created_at},
          {"attempt", r.attempt}, {"manual", r.manual},    {"status", r.status}};
}

ApprovalRequest approval_request_from_json(const json& j) {
  ApprovalRequest r;
  r.id = j.at("id").get<std::string>();
  r.unit = j.at("unit").get<std::string>();
  r.stage = j.at("stage").get<std::string>();
  r.diagnostics = j.value("diagnostics", json::array());
  for (const auto& f : j.value("proposed_fix", json::array())) {
    r.proposed_fix.push_back(proposed_file_from_json(f));
  }
  r.created_at = j.value("created_at", std::int64_t{0});
  r.attempt = j.value("attempt", 0u);
  r.manual = j.value("manual", false);
  r.status = j.value("status", "pending");
  return r;
}

namespace {

json to_json(const UnitState& u) {
  json staged = json::array();
  for (const auto& f : u.staged) staged.push_back(to_json(f));
  return {{"name", u.name},
          {"kind", to_string(u.kind)},
          {"deps", u.deps},
          {"phase", to_string(u.phase)},
          {"attempts", u.attempts},
          {"fix_pending", u.fix_pending},
          {"request", u.request ? json(*u.request) : json(nullptr)},
          {"staged", staged},
          {"staged_request", u.staged_request},
          {"last_failure", u.last_failure}};
}

UnitState unit_from_json(const json& j) {
  UnitState u;
  u.name = j.at("name").get<std::string>();
  u.kind = unit_kind_from_string(j.at("kind").get<std::string>());
  u.deps = j.value("deps", std::vector<std::string>{});
  u.phase = phase_from_string(j.at("phase").get<std::string>());
  u.attempts = j.value("attempts", 0u);
  u.fix_pending = j.value("fix_pending", false);
  if (j.contains("request") && !j["request"].is_null()) u.request = j["request"].get<std::string>();
  for (const auto& f : j.value("staged", json::array())) u.staged.push_back(proposed_file_from_json(f));
  u.staged_request = j.value("staged_request", "");
  u.last_failure = j.contains("last_failure") ? j["last_failure"] : json(nullptr);
  return u;
}

}  // namespace

json to_json(const RunState& s) {
  json units = json::array();
  for (const auto& u : s.units) units.push_back(to_json(u));
  json requests = json::array();
  for (const auto& r : s.requests) requests.push_back(to_json(r));
  return {{"schema_version", s.schema_version},
          {"run_id", s.run_id},
          {"blueprint", json::parse(blueprint::emit_blueprint(s.blueprint))},
          {"plan", s.plan},
          {"config", to_json(s.config)},
          {"units", units},
          {"requests", requests},
          {"ledger", gen::to_json(s.ledger)},
          {"budget_warned", s.budget_warned},
          {"next_request", s.next_request},
          {"event_count", s.events.size()}};
}

RunState run_state_from_json(const json& j, std::vector<Event> events) {
  RunState s;
  s.schema_version = j.at("schema_version").get<int>();
  s.run_id = j.at("run_id").get<std::string>();
  s.blueprint = blueprint::parse_blueprint_json(j.at("blueprint"));
  s.plan = j.at("plan").get<std::vector<std::string>>();
  s.config = workflow_config_from_json(j.at("config"));
  for (const auto& u : j.at("units")) s.units.push_back(unit_from_json(u));
  for (const auto& r : j.at("requests")) s.requests.push_back(approval_request_from_json(r));
  s.ledger = gen::usage_ledger_from_json(j.at("ledger"));
  s.budget_warned = j.value("budget_warned", false);
  s.next_request = j.value("next_request", std::uint64_t{1});
  s.events = std::move(events);
  return s;
}

const UnitState* RunState::find_unit(std::string_view name) const {
  for (const auto& u : units) {
    if (u.name == name) return &u;
  }
  return nullptr;
}

const ApprovalRequest* RunState::find_request(std::string_view id) const {
  for (const auto& r : requests) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::vector<const ApprovalRequest*> pending_approvals(const RunState& s) {
  std::vector<const ApprovalRequest*> out;
  for (const auto& r : s.requests) {
    if (r.status == "pending") out.push_back(&r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Planning

std::string make_run_id(std::string_view project_name) {
  std::string slug;
  for (char c : project_name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!slug.empty() && slug.back() != '-') {
      slug += '-';
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  if (slug.empty()) slug = "run";
  if (slug.size() > 32) slug.resize(32);
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  std::random_device rd;
  return fmt::format("{}-{}-{:04x}", slug, stamp, rd() & 0xFFFF);
}

RunState plan_run(const blueprint::Blueprint& bp, const WorkflowConfig& config,
                  std::string run_id, std::int64_t now) {
  validate(config);
  auto diags = blueprint::consistency_check(bp);
  if (blueprint::has_errors(diags)) {
    std::vector<blueprint::BlueprintDiagnostic> errors;
    for (const auto& d : diags) {
      if (d.severity == blueprint::Severity::kError) errors.push_back(d);
    }
    std::string message = fmt::format("blueprint has {} consistency error(s); first: {} {}",
                                      errors.size(), errors[0].code, errors[0].message);
    throw PlanError(message, std::move(errors));
  }
  RunState s;
  s.run_id = std::move(run_id);
  s.blueprint = bp;
  s.config = config;

  std::optional<std::string> top;
  if (!bp.components.empty()) top = blueprint::top_level_components(bp).at(0);
  for (const auto& name : blueprint::dependency_order(bp)) {
    if (top && name == *top) continue;
    s.plan.push_back(name);
    UnitState u;
    u.name = name;
    u.kind = UnitKind::kComponent;
    u.deps = bp.find(name)->dependencies;
    s.units.push_back(std::move(u));
  }
  if (top) {
    UnitState integ;
    integ.name = *top;
    integ.kind = UnitKind::kIntegration;
    integ.deps = s.plan;
    s.units.push_back(integ);
    // Trace comparison needs the debug outputs of a processor top.
    if (bp.find(*top)->find_port("debug_pc_out") != nullptr) {
      UnitState sys;
      sys.name = std::string(kSystemUnit);
      sys.kind = UnitKind::kSystem;
      sys.deps = {*top};
      s.units.push_back(sys);
    }
  }

  Event created;
  created.seq = 1;
  created.ts = now;
  created.kind = "generated";
  created.unit = "";
  json units = json::array();
  for (const auto& u : s.units) units.push_back({{"name", u.name}, {"kind", to_string(u.kind)}});
  created.payload = {{"what", "run_created"},
                     {"run_id", s.run_id},
                     {"project_name", bp.project_name},
                     {"plan", s.plan},
                     {"units", units}};
  s.events.push_back(std::move(created));
  return s;
}

// ---------------------------------------------------------------------------
// Transitions

namespace {

bool is_agent_active(const UnitState& u) {
  switch (u.phase) {
    case Phase::kGenerating:
    case Phase::kLinting:
    case Phase::kTesting:
    case Phase::kApplyingFix:
      return true;
    case Phase::kAwaitingApproval:
      return u.fix_pending;
    default:
      return false;
  }
}

class Machine {
 public:
  Machine(const RunState& s, std::int64_t now) : s_(s), now_(now) {}

  RunState& state() { return s_; }

  UnitState& unit(const std::string& name) {
    for (auto& u : s_.units) {
      if (u.name == name) return u;
    }
    throw IllegalTransitionError("input for unknown unit '" + name + "'");
  }

  void require(const UnitState& u, Phase p, std::string_view input) {
    if (u.phase != p) {
      throw IllegalTransitionError(fmt::format("{} for unit '{}' in phase {}", input, u.name,
                                               to_string(u.phase)));
    }
  }

  void set_phase(UnitState& u, Phase to) {
    if (u.phase == to) return;
    if (!is_legal_transition(u.phase, to)) {
      throw IllegalTransitionError(fmt::format("unit '{}': {} -> {} is not a legal transition",
                                               u.name, to_string(u.phase), to_string(to)));
    }
    u.phase = to;
  }

  std::uint64_t emit(std::string kind, const UnitState* u, json payload = json::object()) {
    Event e;
    e.seq = s_.events.size() + 1;
    e.ts = s_.events.empty() ? now_ : std::max(now_, s_.events.back().ts);
    e.kind = std::move(kind);
    if (u) {
      e.unit = u->name;
      payload["phase"] = to_string(u->phase);
      payload["attempts"] = u->attempts;
    }
    e.payload = std::move(payload);
    s_.events.push_back(std::move(e));
    return s_.events.back().seq;
  }

  ApprovalRequest& request(const std::string& id) {
    for (auto& r : s_.requests) {
      if (r.id == id) return r;
    }
    throw UnknownRequestError(id);
  }

  std::string stage_name(const UnitState& u, bool test) const {
    switch (u.kind) {
      case UnitKind::kIntegration: return "integration";
      case UnitKind::kSystem: return "system_verify";
      case UnitKind::kComponent: break;
    }
    return test ? "unit_test" : "lint";
  }

  // A lint or test failure: consume an attempt while any remain and ask for a
  // fix. Whether the fix is offered or escalated is decided when it arrives.
  void fail(UnitState& u, const std::string& stage, json diagnostics) {
    u.last_failure = {{"stage", stage}, {"diagnostics", std::move(diagnostics)}};
    if (u.attempts < s_.config.max_attempts) ++u.attempts;
    set_phase(u, Phase::kAwaitingApproval);
    u.fix_pending = true;
    u.request.reset();
  }

  void account(const std::vector<gen::Usage>& usage) {
    for (const auto& x : usage) {
      s_.ledger = gen::accumulate_usage(s_.ledger, x);
      emit("usage", nullptr,
           {{"model", x.model},
            {"prompt_tokens", x.prompt_tokens},
            {"completion_tokens", x.completion_tokens},
            {"total", s_.ledger.total()}});
      if (!s_.budget_warned && s_.ledger.over_budget(s_.config.token_budget)) {
        s_.budget_warned = true;
        emit("budget_warning", nullptr,
             {{"total", s_.ledger.total()}, {"budget", s_.config.token_budget}});
      }
    }
  }

  std::string new_request(UnitState& u, std::vector<ProposedFile> fix, bool manual) {
    ApprovalRequest r;
    r.id = fmt::format("{}-r{}", s_.run_id, s_.next_request++);
    r.unit = u.name;
    r.stage = u.last_failure.is_object() ? u.last_failure.value("stage", "") : "";
    r.diagnostics = u.last_failure.is_object() ? u.last_failure.value("diagnostics", json::array())
                                               : json::array();
    r.proposed_fix = std::move(fix);
    r.created_at = s_.events.empty() ? now_ : std::max(now_, s_.events.back().ts);
    r.attempt = u.attempts;
    r.manual = manual;
    s_.requests.push_back(std::move(r));
    u.request = s_.requests.back().id;
    return s_.requests.back().id;
  }

  void schedule() {
    unsigned active = 0;
    for (const auto& u : s_.units) active += is_agent_active(u) ? 1 : 0;
    for (auto& u : s_.units) {
      if (active >= s_.config.max_parallel) break;
      if (u.phase != Phase::kPending) continue;
      bool ready = std::all_of(u.deps.begin(), u.deps.end(), [&](const std::string& d) {
        const UnitState* dep = s_.find_unit(d);
        return dep != nullptr && dep->phase == Phase::kVerified;
      });
      if (!ready) continue;
      set_phase(u, Phase::kGenerating);
      ++active;
    }
  }

  void check_invariants() const {
    for (const auto& u : s_.units) {
      if (u.attempts > s_.config.max_attempts) {
        throw IllegalTransitionError("unit '" + u.name + "' exceeded max_attempts");
      }
    }
  }

  void on(const input::Tick&) {}

  void on(const input::GenerationDone& in) {
    UnitState& u = unit(in.unit);
    json paths = json::array();
    for (const auto& f : in.files) paths.push_back(f.path);
    if (!in.fix) {
      require(u, Phase::kGenerating, "generation result");
      account(in.usage);
      set_phase(u, Phase::kLinting);
      if (in.error) {
        emit("generated", &u, {{"files", paths}, {"error", *in.error}});
        fail(u, stage_name(u, false),
             json::array({{{"severity", "error"}, {"file", ""}, {"line", nullptr},
                           {"tool_code", "GenerationError"}, {"message", *in.error}}}));
        emit("lint_failed", &u, {{"diagnostics", u.last_failure["diagnostics"]},
                                 {"synthetic", true}});
        return;
      }
      emit("generated", &u, {{"files", paths}});
      return;
    }

    require(u, Phase::kAwaitingApproval, "fix result");
    if (!u.fix_pending) {
      throw IllegalTransitionError("fix result for unit '" + u.name + "' without a fix pending");
    }
    account(in.usage);
    u.fix_pending = false;
    std::optional<std::string> error = in.error;
    if (!error && in.files.empty()) error = "backend returned no files";
    if (error) {
      std::string id = new_request(u, {}, true);
      set_phase(u, Phase::kEscalated);
      emit("escalated", &u, {{"request_id", id}, {"reason", "fix generation failed"},
                             {"error", *error}});
      return;
    }
    bool at_bound = u.attempts >= s_.config.max_attempts;
    std::string id = new_request(u, in.files, at_bound);
    json files = json::array();
    for (const auto& f : in.files) {
      files.push_back({{"path", f.path}, {"is_new", f.is_new}, {"diff", f.diff}});
    }
    if (at_bound) {
      set_phase(u, Phase::kEscalated);
      emit("fix_proposed", &u, {{"request_id", id}, {"files", files}, {"manual", true}});
      emit("escalated", &u, {{"request_id", id}, {"reason", "attempt limit reached"},
                             {"max_attempts", s_.config.max_attempts}});
      return;
    }
    emit("fix_proposed", &u, {{"request_id", id}, {"files", files}, {"manual", false}});
    if (s_.config.auto_approve) {
      request(id).status = "approved";
      set_phase(u, Phase::kApplyingFix);
      emit("approved", &u, {{"request_id", id}, {"auto", true}});
    }
  }

  void emit_staged_applied(UnitState& u) {
    if (u.staged.empty()) return;
    json paths = json::array();
    for (const auto& f : u.staged) paths.push_back(f.path);
    emit("fix_applied", &u, {{"request_id", u.staged_request}, {"paths", paths}});
    u.staged.clear();
    u.staged_request.clear();
  }

  void on(const input::LintDone& in) {
    UnitState& u = unit(in.unit);
    require(u, Phase::kLinting, "lint report");
    emit_staged_applied(u);
    json diags = json::array();
    for (const auto& d : in.report.diagnostics) diags.push_back(tools::to_json(d));
    if (in.report.passed) {
      set_phase(u, Phase::kTesting);
      emit("lint_passed", &u, {{"diagnostics", diags}});
    } else {
      fail(u, stage_name(u, false), diags);
      emit("lint_failed", &u, {{"diagnostics", diags}});
    }
  }

  void on(const input::TestDone& in) {
    UnitState& u = unit(in.unit);
    require(u, Phase::kTesting, "test report");
    json failures = json::array();
    for (const auto& f : in.report.failures) {
      failures.push_back({{"name", f.name}, {"message", f.message}});
    }
    json details = {{"tests_run", in.report.tests_run}, {"failures", failures}};
    if (u.kind == UnitKind::kSystem) {
      bool passed = in.report.passed && in.sysverify_passed;
      json payload = details;
      payload["sysverify"] = in.sysverify.value_or(json(nullptr));
      if (passed) {
        set_phase(u, Phase::kVerified);
        emit("sysverify_passed", &u, payload);
      } else {
        json diags = {{"test", details},
                      {"sysverify", payload["sysverify"]},
                      {"log_tail", in.report.raw_log}};
        fail(u, stage_name(u, true), diags);
        emit("sysverify_failed", &u, payload);
      }
      return;
    }
    if (in.report.passed) {
      set_phase(u, Phase::kVerified);
      emit("test_passed", &u, details);
      if (u.kind == UnitKind::kIntegration) emit("integrated", &u, {{"top", u.name}});
    } else {
      json diags = failures;
      if (!in.report.raw_log.empty()) {
        diags.push_back({{"name", "log_tail"}, {"message", in.report.raw_log}});
      }
      fail(u, stage_name(u, true), diags);
      emit("test_failed", &u, details);
    }
  }

  void on(const input::FixMaterialized& in) {
    UnitState& u = unit(in.unit);
    require(u, Phase::kApplyingFix, "fix materialization");
    set_phase(u, Phase::kLinting);
    emit("fix_applied", &u, {{"request_id", u.request.value_or("")}, {"paths", in.paths}});
    u.request.reset();
  }

  void on(const input::Decision& d) {
    ApprovalRequest& r = request(d.request_id);
    if (r.status != "pending") throw StaleRequestError(r.id, r.status);
    UnitState& u = unit(r.unit);
    Phase expected = r.manual ? Phase::kEscalated : Phase::kAwaitingApproval;
    if (u.phase != expected || u.request != r.id) {
      throw StaleRequestError(r.id, "superseded");
    }
    using V = input::Decision::Verdict;
    switch (d.verdict) {
      case V::kApprove: {
        if (r.manual) {
          if (r.proposed_fix.empty()) {
            throw ValidationError("request '" + r.id + "' has no fix to approve; submit an edit");
          }
          u.staged = r.proposed_fix;
          u.staged_request = r.id;
          u.request.reset();
          set_phase(u, Phase::kLinting);
        } else {
          set_phase(u, Phase::kApplyingFix);
        }
        r.status = "approved";
        emit("approved", &u, {{"request_id", r.id}, {"auto", false}, {"note", d.note}});
        return;
      }
      case V::kReject: {
        if (r.manual) {
          throw ValidationError("request '" + r.id +
                                "' is at the attempt limit; approve its fix or submit an edit");
        }
        r.status = "rejected";
        if (u.attempts < s_.config.max_attempts) ++u.attempts;
        u.fix_pending = true;
        u.request.reset();
        emit("rejected", &u, {{"request_id", r.id}, {"note", d.note}});
        return;
      }
      case V::kEdit: {
        if (d.files.empty()) throw ValidationError("an edit must supply at least one file");
        json files = json::array();
        for (const auto& f : d.files) {
          if (!is_safe_relative_path(f.path)) throw PathEscapeError(f.path);
          files.push_back({{"path", f.path}, {"is_new", f.is_new}, {"diff", f.diff}});
        }
        r.status = "edited";
        u.staged = d.files;
        u.staged_request = r.id;
        u.request.reset();
        u.fix_pending = false;
        u.attempts = 0;
        set_phase(u, Phase::kLinting);
        emit("human_edit", &u, {{"request_id", r.id}, {"files", files}, {"note", d.note}});
        return;
      }
    }
  }

 private:
  RunState s_;
  std::int64_t now_;
};

}  // namespace

std::vector<Action> pending_actions(const RunState& s) {
  std::vector<Action> out;
  bool all_verified = true;
  for (const auto& u : s.units) {
    if (u.phase != Phase::kVerified) all_verified = false;
    Action a;
    a.unit = u.name;
    switch (u.phase) {
      case Phase::kGenerating:
        a.kind = u.kind == UnitKind::kIntegration ? Action::Kind::kIntegrate
                                                  : Action::Kind::kRequestGeneration;
        break;
      case Phase::kLinting:
        a.kind = Action::Kind::kRunLint;
        break;
      case Phase::kTesting:
        a.kind = u.kind == UnitKind::kSystem ? Action::Kind::kRunSystemVerify
                                             : Action::Kind::kRunTests;
        break;
      case Phase::kAwaitingApproval:
        if (u.fix_pending) {
          a.kind = Action::Kind::kRequestGeneration;
          a.fix = true;
        } else {
          a.kind = Action::Kind::kAwaitHuman;
          a.request_id = u.request.value_or("");
        }
        break;
      case Phase::kApplyingFix:
        a.kind = Action::Kind::kApplyFix;
        a.request_id = u.request.value_or("");
        break;
      case Phase::kEscalated:
        a.kind = Action::Kind::kAwaitHuman;
        a.request_id = u.request.value_or("");
        break;
      case Phase::kPending:
      case Phase::kVerified:
        continue;
    }
    out.push_back(std::move(a));
  }
  if (all_verified) out.push_back(Action{Action::Kind::kDone, "", false, ""});
  return out;
}

Step advance(const RunState& s, const Input& in, std::int64_t now) {
  Machine m(s, now);
  std::visit([&](const auto& x) { m.on(x); }, in);
  m.schedule();
  m.check_invariants();
  Step step{std::move(m.state()), {}};
  step.actions = pending_actions(step.state);
  return step;
}

RunState apply_decision(const RunState& s, const input::Decision& d, std::int64_t now) {
  return advance(s, d, now).state;
}

std::string verdict(const RunState& s) {
  bool all_verified = true, waiting_review = false;
  for (const auto& u : s.units) {
    if (u.phase != Phase::kVerified) all_verified = false;
  }
  if (all_verified) return "verified";
  for (const auto& u : s.units) {
    if (u.phase != Phase::kPending) continue;
    bool ready = std::all_of(u.deps.begin(), u.deps.end(), [&](const std::string& d) {
      const UnitState* dep = s.find_unit(d);
      return dep != nullptr && dep->phase == Phase::kVerified;
    });
    if (ready) return "running";
  }
  for (const auto& a : pending_actions(s)) {
    if (a.kind != Action::Kind::kAwaitHuman) return "running";
    const ApprovalRequest* r = s.find_request(a.request_id);
    if (r && !r->manual) waiting_review = true;
  }
  return waiting_review ? "awaiting_approval" : "escalated";
}

bool is_terminal(const RunState& s) {
  std::string v = verdict(s);
  return v == "verified" || v == "escalated";
}

json report_json(const RunState& s) {
  json units = json::array();
  for (const auto& u : s.units) {
    units.push_back({{"name", u.name},
                     {"kind", to_string(u.kind)},
                     {"phase", to_string(u.phase)},
                     {"attempts", u.attempts}});
  }
  json pending = json::array();
  for (const auto* r : pending_approvals(s)) {
    pending.push_back({{"id", r->id}, {"unit", r->unit}, {"stage", r->stage}, {"manual", r->manual}});
  }
  json usage = gen::to_json(s.ledger);
  usage["total"] = s.ledger.total();
  usage["budget"] = s.config.token_budget;
  usage["over_budget"] = s.ledger.over_budget(s.config.token_budget);
  return {{"run_id", s.run_id},
          {"project_name", s.blueprint.project_name},
          {"max_attempts", s.config.max_attempts},
          {"units", units},
          {"pending_approvals", pending},
          {"usage", usage},
          {"events", s.events.size()},
          {"verdict", verdict(s)},
          {"terminal", is_terminal(s)}};
}

std::string report_text(const RunState& s) {
  std::string out = fmt::format("run {} ({})\n", s.run_id, s.blueprint.project_name);
  std::size_t w = 4;
  for (const auto& u : s.units) w = std::max(w, u.name.size());
  out += fmt::format("{:<{}}  {:<11}  {:<16}  {}\n", "unit", w, "kind", "phase", "attempts");
  for (const auto& u : s.units) {
    out += fmt::format("{:<{}}  {:<11}  {:<16}  {}/{}\n", u.name, w, to_string(u.kind),
                       to_string(u.phase), u.attempts, s.config.max_attempts);
  }
  auto pending = pending_approvals(s);
  for (const auto* r : pending) {
    out += fmt::format("pending approval {} ({}, {}{})\n", r->id, r->unit, r->stage,
                       r->manual ? ", escalated" : "");
  }
  out += fmt::format("tokens {} / {}{}\n", s.ledger.total(), s.config.token_budget,
                     s.ledger.over_budget(s.config.token_budget) ? " (over budget)" : "");
  out += fmt::format("verdict {}\n", verdict(s));
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

fs::path workspace_dir(const fs::path& run_dir) { return run_dir / "workspace"; }

namespace {

std::vector<std::string> journal_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::error_code ec;
  if (!fs::exists(path, ec)) return lines;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

void persist(const RunState& s, const fs::path& run_dir) {
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw IoError("cannot create run directory " + run_dir.string() + ": " + ec.message());
  fs::path journal = run_dir / "events.jsonl";
  std::size_t have = journal_lines(journal).size();
  if (have > s.events.size()) {
    throw CorruptStateError(fmt::format("journal holds {} events but the state only {}", have,
                                        s.events.size()));
  }
  if (have < s.events.size()) {
    std::string chunk;
    for (std::size_t i = have; i < s.events.size(); ++i) {
      json line = to_json(s.events[i]);
      line["schema_version"] = kSchemaVersion;
      chunk += line.dump() + "\n";
    }
    std::ofstream out(journal, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to " + journal.string());
    out << chunk;
    out.flush();
    if (!out) throw IoError("short write to " + journal.string());
  }
  write_file_atomic(run_dir / "state.json", to_json(s).dump(2) + "\n");
}

RunState load(const fs::path& run_dir) {
  fs::path state_file = run_dir / "state.json";
  std::error_code ec;
  if (!fs::exists(state_file, ec)) {
    throw IoError("no run state in " + run_dir.string(), true);
  }
  json doc;
  try {
    doc = json::parse(read_file(state_file));
  } catch (const json::exception& e) {
    throw CorruptStateError(std::string("state.json is not valid JSON: ") + e.what());
  }
  if (doc.value("schema_version", 0) != kSchemaVersion) {
    throw CorruptStateError("unsupported state schema_version");
  }
  std::vector<Event> events;
  for (const auto& line : journal_lines(run_dir / "events.jsonl")) {
    try {
      events.push_back(event_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw CorruptStateError(std::string("bad journal line: ") + e.what());
    }
  }
  std::size_t claimed = doc.value("event_count", std::size_t{0});
  if (claimed != events.size()) {
    throw CorruptStateError(fmt::format("journal holds {} events but the state claims {}",
                                        events.size(), claimed));
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].seq != i + 1) throw CorruptStateError("journal sequence numbers have a gap");
    if (i > 0 && events[i].ts < events[i - 1].ts) {
      throw CorruptStateError("journal timestamps go backwards");
    }
  }
  try {
    return run_state_from_json(doc, std::move(events));
  } catch (const json::exception& e) {
    throw CorruptStateError(std::string("state.json is malformed: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Workspace helpers

std::string unit_subdir(const RunState& s, const UnitState& u) {
  switch (u.kind) {
    case UnitKind::kComponent: return tools::Workspace::component_subdir(u.name);
    case UnitKind::kIntegration: return tools::Workspace::integration_subdir();
    case UnitKind::kSystem: return tools::Workspace::system_subdir();
  }
  return tools::Workspace::component_subdir(u.name);
}

std::string fix_target(const RunState& s, const UnitState& u) {
  if (u.kind == UnitKind::kComponent) {
    return unit_subdir(s, u) + "/" + gen::hdl_file_name(*s.blueprint.find(u.name));
  }
  std::string top = u.kind == UnitKind::kIntegration ? u.name : u.deps.at(0);
  return tools::Workspace::integration_subdir() + "/" +
         gen::hdl_file_name(*s.blueprint.find(top));
}

std::vector<ProposedFile> describe_files(const tools::Workspace& ws,
                                         std::vector<ProposedFile> files) {
  for (auto& f : files) {
    fs::path target = ws.resolve(f.path);
    std::error_code ec;
    if (fs::exists(target, ec)) {
      f.is_new = false;
      f.diff = unified_diff(read_file(target), f.content, "a/" + f.path, "b/" + f.path);
    } else {
      f.is_new = true;
      f.diff = unified_diff("", f.content, "/dev/null", "b/" + f.path);
    }
  }
  return files;
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace archloop::wf
