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

#ifndef ARCHLOOP_GENBACKEND_HPP
#define ARCHLOOP_GENBACKEND_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "archloop/blueprint.hpp"
#include "archloop/errors.hpp"
#include "json.hpp"

// Generation backends (template, replay, remote chat-completion), model
// routing and token accounting.
namespace archloop::gen {

enum class TaskKind {
  kBlueprintPlan,
  kComponentHdl,
  kComponentTestbench,
  kFix,
  kIntegrationHdl,
  kSystemTestbench,
};

inline constexpr TaskKind kAllTaskKinds[] = {
    TaskKind::kBlueprintPlan,  TaskKind::kComponentHdl,
    TaskKind::kComponentTestbench, TaskKind::kFix,
    TaskKind::kIntegrationHdl, TaskKind::kSystemTestbench};

std::string_view to_string(TaskKind k);
/// Throws ConfigError for an unknown name.
TaskKind task_kind_from_string(std::string_view name);

enum class ModelClass { kReasoning, kNonReasoning };

std::string_view to_string(ModelClass c);

struct ModelRoute {
  struct Entry {
    std::string model;
    ModelClass model_class = ModelClass::kNonReasoning;
    bool operator==(const Entry&) const = default;
  };
  std::map<TaskKind, Entry> table;

  /// Planning, fixes and integration go to the reasoning model; component
  /// code and testbenches to the non-reasoning one.
  static ModelRoute defaults(std::string reasoning_model = "gemini-pro",
                             std::string non_reasoning_model = "gpt-5-mini");

  bool operator==(const ModelRoute&) const = default;
};

nlohmann::json to_json(const ModelRoute& r);
/// Accepts either {"kind": "model"} or {"kind": {"model", "class"}}; entries
/// override `base`.
ModelRoute model_route_from_json(const nlohmann::json& j,
                                 ModelRoute base = ModelRoute::defaults());

/// Throws ConfigError when `kind` has no entry.
std::string route_model(TaskKind kind, const ModelRoute& route);

// ---------------------------------------------------------------------------
// Usage accounting

struct Usage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  std::string model;

  std::uint64_t total() const { return prompt_tokens + completion_tokens; }
  bool operator==(const Usage&) const = default;
};

struct UsageLedger {
  std::map<std::string, Usage> per_model;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;

  std::uint64_t total() const { return prompt_tokens + completion_tokens; }
  bool over_budget(std::uint64_t budget) const { return total() > budget; }
  bool operator==(const UsageLedger&) const = default;
};

inline constexpr std::uint64_t kDefaultTokenBudget = 1'000'000;

UsageLedger accumulate_usage(UsageLedger ledger, const Usage& u);

nlohmann::json to_json(const Usage& u);
Usage usage_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UsageLedger& l);
UsageLedger usage_ledger_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Tasks and results

struct GeneratedFile {
  std::string path;
  std::string content;
  bool operator==(const GeneratedFile&) const = default;
};

/// `context` is the structured bundle handed to the backend. Keys used by the
/// shipped task builders:
///   component      ComponentSpec as blueprint JSON
///   parameters     the blueprint parameter table
///   submodules     (integration) dependency ComponentSpecs
///   sources        (testbenches) HDL paths relative to the unit directory
///   target         (fix) file to rewrite
///   current        (fix) its current content
///   diagnostics    (fix) list of diagnostics / failure records
///   stage, attempt (fix)
/// Keys starting with '_' are informational and excluded from fixture keys.
struct GenerationTask {
  TaskKind kind = TaskKind::kComponentHdl;
  nlohmann::json context = nlohmann::json::object();
  std::string instructions;

  bool operator==(const GenerationTask&) const = default;
};

struct GenerationResult {
  std::vector<GeneratedFile> files;
  Usage usage;
  std::string backend_id;

  bool operator==(const GenerationResult&) const = default;
};

nlohmann::json to_json(const GenerationTask& t);
GenerationTask generation_task_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenerationResult& r);
GenerationResult generation_result_from_json(const nlohmann::json& j);

/// Throws ValidationError when a fix task carries no diagnostics.
void validate_task(const GenerationTask& task);

/// Replaces `{{name}}` with vars[name]; unknown placeholders are kept.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars);

// Task builders used by the workflow. All render their instructions from the
// shipped prompt templates.
GenerationTask make_component_hdl_task(const blueprint::Blueprint& bp,
                                       const blueprint::ComponentSpec& c);
GenerationTask make_component_testbench_task(
    const blueprint::Blueprint& bp, const blueprint::ComponentSpec& c,
    const std::vector<std::string>& sources);
GenerationTask make_integration_task(const blueprint::Blueprint& bp,
                                     const blueprint::ComponentSpec& top);
GenerationTask make_system_testbench_task(
    const blueprint::Blueprint& bp, const blueprint::ComponentSpec& top,
    const std::vector<std::string>& sources, std::uint64_t cycles);
struct FixRequest {
  std::string stage;  // lint, unit_test, integration, system_verify
  std::string target;
  std::string current;
  nlohmann::json diagnostics = nlohmann::json::array();
  unsigned attempt = 0;
  unsigned max_attempts = 0;
  std::size_t max_context_bytes = 32 * 1024;
  /// The task that originally produced `target`; its context is carried
  /// over so a backend can regenerate the file.
  TaskKind regenerate = TaskKind::kComponentHdl;
  nlohmann::json base_context = nlohmann::json::object();
};
GenerationTask make_fix_task(const blueprint::Blueprint& bp,
                             const blueprint::ComponentSpec& c,
                             const FixRequest& fix);
GenerationTask make_blueprint_plan_task(std::string_view project_name,
                                        std::string_view brief);

/// File name a component's HDL is generated into.
std::string hdl_file_name(const blueprint::ComponentSpec& c);

/// SHA-256 (hex) of the canonical (kind, normalized context, instructions).
std::string task_hash(const GenerationTask& task);

// ---------------------------------------------------------------------------
// Backends

class BackendError : public Error {
 public:
  enum class Kind { kTransport, kMalformedResponse };
  BackendError(Kind kind, const std::string& message,
               std::optional<std::chrono::milliseconds> retry_after = {})
      : Error(kind == Kind::kTransport ? "BackendTransport"
                                       : "BackendMalformedResponse",
              message),
        kind_(kind),
        retry_after_(retry_after) {}
  Kind kind() const noexcept { return kind_; }
  std::optional<std::chrono::milliseconds> retry_after() const noexcept {
    return retry_after_;
  }

 private:
  Kind kind_;
  std::optional<std::chrono::milliseconds> retry_after_;
};

class ReplayMiss : public Error {
 public:
  explicit ReplayMiss(std::string hash)
      : Error("ReplayMiss", "no recorded fixture for task " + hash),
        hash_(std::move(hash)) {}
  const std::string& hash() const noexcept { return hash_; }

 private:
  std::string hash_;
};

class StoreError : public Error {
 public:
  explicit StoreError(const std::string& message)
      : Error("StoreError", message) {}
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual GenerationResult generate(const GenerationTask& task) = 0;
};

/// Validates the task, calls the backend and rejects any produced path that
/// is not a safe relative path (PathEscapeError).
GenerationResult generate(const GenerationTask& task, Backend& backend);

/// Instantiates the shipped HDL and testbench templates. Pure and offline.
class TemplateBackend : public Backend {
 public:
  explicit TemplateBackend(ModelRoute route = ModelRoute::defaults())
      : route_(std::move(route)) {}
  std::string id() const override { return "template"; }
  GenerationResult generate(const GenerationTask& task) override;

 private:
  ModelRoute route_;
};

/// Directory of `{task_hash}.json` fixtures.
class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path dir) : dir_(std::move(dir)) {}
  const std::filesystem::path& dir() const { return dir_; }
  std::optional<GenerationResult> find(const GenerationTask& task) const;

 private:
  std::filesystem::path dir_;
};

/// Persists `result` under the task hash, replacing any earlier recording.
/// Returns the fixture id (the hash).
std::string record_fixture(const GenerationTask& task,
                           const GenerationResult& result,
                           const FixtureStore& store);

class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(FixtureStore store) : store_(std::move(store)) {}
  std::string id() const override { return "replay"; }
  GenerationResult generate(const GenerationTask& task) override;

 private:
  FixtureStore store_;
};

/// Wraps another backend and records every result into a store.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, FixtureStore store)
      : inner_(std::move(inner)), store_(std::move(store)) {}
  std::string id() const override { return inner_->id(); }
  GenerationResult generate(const GenerationTask& task) override;

 private:
  std::shared_ptr<Backend> inner_;
  FixtureStore store_;
};

struct RemoteConfig {
  /// Full URL of the chat-completion endpoint.
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  /// Environment variable holding the bearer credential.
  std::string api_key_env = "ARCHLOOP_API_KEY";
  ModelRoute route = ModelRoute::defaults();
  unsigned max_in_flight = 4;
  unsigned max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::seconds timeout{120};
};

RemoteConfig remote_config_from_json(const nlohmann::json& j);

/// Extracts fenced code blocks. A block's filename comes from its info
/// string (`lang name.ext`, `name.ext`, `lang:name.ext` or
/// `lang filename=name.ext`); the first block without one gets `fallback`.
/// Throws BackendError(kMalformedResponse) when there are no blocks.
std::vector<GeneratedFile> extract_code_blocks(std::string_view text,
                                               std::string_view fallback);

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig cfg);
  std::string id() const override { return "remote"; }
  GenerationResult generate(const GenerationTask& task) override;

 private:
  RemoteConfig cfg_;
  std::counting_semaphore<> slots_;
};

}  // namespace archloop::gen

#endif  // ARCHLOOP_GENBACKEND_HPP
