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

#ifndef ARCHLOOP_WORKFLOW_HPP
#define ARCHLOOP_WORKFLOW_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "archloop/blueprint.hpp"
#include "archloop/errors.hpp"
#include "archloop/genbackend.hpp"
#include "archloop/toolrunners.hpp"
#include "json.hpp"

// Orchestrator state machine: per-unit phases, bounded fix loops with human
// approval, persistence and the control loop that drives executors.
namespace archloop::wf {

inline constexpr int kSchemaVersion = 1;

enum class Phase {
  kPending,
  kGenerating,
  kLinting,
  kTesting,
  kAwaitingApproval,
  kApplyingFix,
  kVerified,
  kEscalated,
};

inline constexpr Phase kAllPhases[] = {
    Phase::kPending,          Phase::kGenerating,  Phase::kLinting,
    Phase::kTesting,          Phase::kAwaitingApproval, Phase::kApplyingFix,
    Phase::kVerified,         Phase::kEscalated};

std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view s);

/// The phase graph. Staying in the same phase is not a transition.
bool is_legal_transition(Phase from, Phase to);
const std::vector<std::pair<Phase, Phase>>& legal_transitions();

enum class UnitKind { kComponent, kIntegration, kSystem };

std::string_view to_string(UnitKind k);

/// Name of the synthetic system-verification unit.
inline constexpr std::string_view kSystemUnit = "system";

struct WorkflowConfig {
  unsigned max_attempts = 3;
  bool auto_approve = false;
  std::uint64_t token_budget = gen::kDefaultTokenBudget;
  /// Units doing agent work at the same time.
  unsigned max_parallel = 2;
  std::string backend = "template";
  gen::ModelRoute route = gen::ModelRoute::defaults();
  unsigned lint_timeout_s = 60;
  unsigned test_timeout_s = 300;
  std::uint64_t sysverify_cycles = 64;
  /// Asset name of the program used for system verification.
  std::string program = "programs/smoke.asm";

  bool operator==(const WorkflowConfig&) const = default;
};

/// Throws ConfigError on out-of-range values.
void validate(const WorkflowConfig& c);
nlohmann::json to_json(const WorkflowConfig& c);
WorkflowConfig workflow_config_from_json(const nlohmann::json& j, WorkflowConfig base = {});

/// A file a fix or an edit would write. Paths are workspace-relative.
struct ProposedFile {
  std::string path;
  std::string content;
  bool is_new = false;
  /// Unified diff against the workspace content at proposal time.
  std::string diff;

  bool operator==(const ProposedFile&) const = default;
};

struct ApprovalRequest {
  std::string id;
  std::string unit;
  /// lint, unit_test, integration or system_verify.
  std::string stage;
  nlohmann::json diagnostics = nlohmann::json::array();
  std::vector<ProposedFile> proposed_fix;
  std::int64_t created_at = 0;
  unsigned attempt = 0;
  /// Raised at the attempt bound; only approve (with a fix) or edit apply.
  bool manual = false;
  /// pending, approved, rejected or edited.
  std::string status = "pending";

  bool operator==(const ApprovalRequest&) const = default;
};

struct UnitState {
  std::string name;
  UnitKind kind = UnitKind::kComponent;
  std::vector<std::string> deps;
  Phase phase = Phase::kPending;
  unsigned attempts = 0;
  /// In AwaitingApproval: a fix is being generated.
  bool fix_pending = false;
  std::optional<std::string> request;
  /// Files written before the next lint (approved escalation fix or edit).
  std::vector<ProposedFile> staged;
  std::string staged_request;
  /// {stage, diagnostics} of the most recent failure.
  nlohmann::json last_failure = nullptr;

  bool operator==(const UnitState&) const = default;
};

struct Event {
  std::uint64_t seq = 0;
  std::int64_t ts = 0;  // ms since the Unix epoch
  std::string kind;
  std::string unit;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const Event&) const = default;
};

struct RunState {
  int schema_version = kSchemaVersion;
  std::string run_id;
  blueprint::Blueprint blueprint;
  /// Component units in dependency order (the top is integrated separately).
  std::vector<std::string> plan;
  WorkflowConfig config;
  std::vector<UnitState> units;
  std::vector<ApprovalRequest> requests;
  gen::UsageLedger ledger;
  bool budget_warned = false;
  std::uint64_t next_request = 1;
  std::vector<Event> events;

  const UnitState* find_unit(std::string_view name) const;
  const ApprovalRequest* find_request(std::string_view id) const;
  bool operator==(const RunState&) const = default;
};

std::vector<const ApprovalRequest*> pending_approvals(const RunState& s);

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProposedFile& f);
ProposedFile proposed_file_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ApprovalRequest& r);
ApprovalRequest approval_request_from_json(const nlohmann::json& j);
/// Snapshot without the event list (events live in the journal).
nlohmann::json to_json(const RunState& s);
RunState run_state_from_json(const nlohmann::json& j, std::vector<Event> events);

// ---------------------------------------------------------------------------
// Errors

class PlanError : public Error {
 public:
  PlanError(const std::string& message, std::vector<blueprint::BlueprintDiagnostic> diags)
      : Error("PlanError", message), diagnostics_(std::move(diags)) {}
  const std::vector<blueprint::BlueprintDiagnostic>& diagnostics() const noexcept {
    return diagnostics_;
  }

 private:
  std::vector<blueprint::BlueprintDiagnostic> diagnostics_;
};

class IllegalTransitionError : public Error {
 public:
  explicit IllegalTransitionError(const std::string& m) : Error("IllegalTransition", m) {}
};

class UnknownRequestError : public Error {
 public:
  explicit UnknownRequestError(const std::string& id)
      : Error("NotFound", "unknown approval request '" + id + "'") {}
};

class StaleRequestError : public Error {
 public:
  explicit StaleRequestError(const std::string& id, const std::string& status)
      : Error("StaleRequest", "approval request '" + id + "' is already " + status) {}
};

class CorruptStateError : public Error {
 public:
  explicit CorruptStateError(const std::string& m) : Error("CorruptState", m) {}
};

// ---------------------------------------------------------------------------
// Planning and transitions

/// Throws PlanError when the blueprint has consistency errors.
RunState plan_run(const blueprint::Blueprint& bp, const WorkflowConfig& config,
                  std::string run_id, std::int64_t now_ms);

/// `<slug>-<yyyymmdd-hhmmss>-<hex>`.
std::string make_run_id(std::string_view project_name);

struct Action {
  enum class Kind {
    kRequestGeneration,
    kIntegrate,
    kRunLint,
    kRunTests,
    kRunSystemVerify,
    kApplyFix,
    kAwaitHuman,
    kDone,
  };
  Kind kind = Kind::kDone;
  std::string unit;
  /// kRequestGeneration: a fix rather than the initial files.
  bool fix = false;
  /// kApplyFix / kAwaitHuman.
  std::string request_id;

  bool operator==(const Action&) const = default;
};

std::string_view to_string(Action::Kind k);

/// Work implied by the current phases. Depends on nothing else, so it can be
/// recomputed after a reload.
std::vector<Action> pending_actions(const RunState& s);

namespace input {

/// Starts eligible Pending units. Every other input does the same afterwards.
struct Tick {};

struct GenerationDone {
  std::string unit;
  bool fix = false;
  /// Initial generation: paths written. Fix: the proposal.
  std::vector<ProposedFile> files;
  std::vector<gen::Usage> usage;
  std::optional<std::string> error;
};

struct LintDone {
  std::string unit;
  tools::LintReport report;
};

struct TestDone {
  std::string unit;
  tools::TestReport report;
  /// System unit only: the trace comparison report.
  std::optional<nlohmann::json> sysverify;
  bool sysverify_passed = false;
};

struct FixMaterialized {
  std::string unit;
  std::vector<std::string> paths;
};

struct Decision {
  enum class Verdict { kApprove, kReject, kEdit };
  std::string request_id;
  Verdict verdict = Verdict::kApprove;
  /// kEdit: full replacement contents.
  std::vector<ProposedFile> files;
  std::string note;
};

}  // namespace input

using Input = std::variant<input::Tick, input::GenerationDone, input::LintDone,
                           input::TestDone, input::FixMaterialized, input::Decision>;

std::optional<input::Decision::Verdict> verdict_from_string(std::string_view s);

struct Step {
  RunState state;
  std::vector<Action> actions;
};

/// Pure transition function. Appends events with gapless sequence numbers and
/// timestamps no earlier than the previous event. Throws
/// IllegalTransitionError when the input does not fit the unit's phase, and
/// UnknownRequestError / StaleRequestError / ValidationError for decisions.
Step advance(const RunState& s, const Input& in, std::int64_t now_ms);

RunState apply_decision(const RunState& s, const input::Decision& d, std::int64_t now_ms);

/// verified, escalated, awaiting_approval or running.
std::string verdict(const RunState& s);
bool is_terminal(const RunState& s);
nlohmann::json report_json(const RunState& s);
std::string report_text(const RunState& s);

// ---------------------------------------------------------------------------
// Persistence: `state.json` snapshot plus append-only `events.jsonl`.

void persist(const RunState& s, const std::filesystem::path& run_dir);
/// Throws IoError (not_found) for a directory without a run and
/// CorruptStateError when the journal disagrees with the snapshot.
RunState load(const std::filesystem::path& run_dir);

std::filesystem::path workspace_dir(const std::filesystem::path& run_dir);

// ---------------------------------------------------------------------------
// Workspace helpers shared by the executor, the service and the CLI.

/// Workspace-relative directory of a unit.
std::string unit_subdir(const RunState& s, const UnitState& u);
/// Workspace-relative HDL file a fix for the unit rewrites.
std::string fix_target(const RunState& s, const UnitState& u);

/// Fills `is_new` and `diff` against the workspace. Throws PathEscapeError.
std::vector<ProposedFile> describe_files(const tools::Workspace& ws,
                                         std::vector<ProposedFile> files);

// ---------------------------------------------------------------------------
// Control loop

struct DecisionOutcome {
  bool ok = false;
  std::uint64_t seq = 0;  // sequence number of the recorded event
  std::string code;
  std::string message;
};

/// The single-writer queue of the control loop. Completed executor work and
/// decisions from other threads are both posted here.
class Inbox {
 public:
  std::future<DecisionOutcome> post_decision(input::Decision d);
  void request_stop();

  struct Item {
    std::optional<Input> input;
    std::optional<std::promise<DecisionOutcome>> reply;
    bool stop = false;
    /// Executor completions: the loop that dispatched the work (0 for
    /// decisions), the in-flight key, and an unrecoverable error.
    std::uint64_t loop = 0;
    std::string key;
    std::optional<std::string> fatal;
  };
  void post(Item item);
  /// Waits up to `timeout` for an item.
  std::optional<Item> pop(std::chrono::milliseconds timeout);
  /// Fails every queued decision and drops everything else (used when a loop exits).
  void drain_decisions(const std::string& code, const std::string& message);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Item> items_;
};

struct Executors {
  gen::Backend* backend = nullptr;
  tools::ToolRunner* runner = nullptr;
};

struct RunOptions {
  /// Executor threads, further capped by the run config's max_parallel.
  unsigned workers = 4;
  /// Stop (as if killed) after this many persisted transitions.
  std::optional<std::size_t> stop_after_transitions;
  /// Decisions from another thread; the loop waits on it while blocked when
  /// `wait_for_decisions` is set.
  Inbox* inbox = nullptr;
  bool wait_for_decisions = false;
  /// Consulted when nothing else can run; returns a decision or nothing.
  std::function<std::optional<input::Decision>(const RunState&)> scripted;
  /// Called after each persisted transition with the new events.
  std::function<void(const RunState&, const std::vector<Event>&)> on_transition;
  std::function<std::int64_t()> clock;
};

/// Drives advance() until Done, or until only human decisions remain and no
/// decision source can supply one. Persists to `run_dir` after every
/// transition. Executor failures become failed-stage inputs.
RunState run_to_completion(RunState s, const Executors& ex,
                           const std::filesystem::path& run_dir, RunOptions opts = {});

std::int64_t now_ms();

}  // namespace archloop::wf

#endif  // ARCHLOOP_WORKFLOW_HPP
