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

#ifndef ARCHLOOP_TOOLRUNNERS_HPP
#define ARCHLOOP_TOOLRUNNERS_HPP

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "archloop/errors.hpp"
#include "archloop/genbackend.hpp"
#include "json.hpp"

// Lint and simulation-test adapters: workspace layout, subprocess runners,
// log/result parsers and an offline mock runner.
namespace archloop::tools {

enum class Severity { kError, kWarning };

std::string_view to_string(Severity s);

struct Diagnostic {
  Severity severity = Severity::kError;
  std::string file;
  std::optional<unsigned> line;
  std::optional<std::string> tool_code;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

struct LintReport {
  bool passed = true;
  std::vector<Diagnostic> diagnostics;
  std::string raw_log;

  /// `passed` is derived: no error-severity diagnostic.
  static LintReport from(std::vector<Diagnostic> diagnostics, std::string raw_log);
  bool operator==(const LintReport&) const = default;
};

struct TestFailure {
  std::string name;
  std::string message;
  bool operator==(const TestFailure&) const = default;
};

struct TestReport {
  bool passed = false;
  unsigned tests_run = 0;
  std::vector<TestFailure> failures;
  std::string raw_log;

  /// `passed` is derived: no failures and at least one test run.
  static TestReport from(unsigned tests_run, std::vector<TestFailure> failures,
                         std::string raw_log);
  bool operator==(const TestReport&) const = default;
};

nlohmann::json to_json(const Diagnostic& d);
Diagnostic diagnostic_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LintReport& r);
LintReport lint_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TestReport& r);
TestReport test_report_from_json(const nlohmann::json& j);

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error("FormatError", m) {}
};

class ToolMissingError : public Error {
 public:
  explicit ToolMissingError(const std::string& tool)
      : Error("ToolMissing", "tool not found on PATH: " + tool), tool_(tool) {}
  const std::string& tool() const noexcept { return tool_; }

 private:
  std::string tool_;
};

/// Verilator-style `%Error[-CODE]: file:line[:col]: message` lines. Lines
/// without a location keep an empty file. Never throws; at most one
/// diagnostic per input line.
std::vector<Diagnostic> parse_lint_log(std::string_view log);

/// JUnit-style XML (testsuites/testsuite/testcase with failure or error
/// children, as written by cocotb). Skipped cases are not counted.
/// Throws FormatError on malformed input.
TestReport parse_test_results(std::string_view xml);

// ---------------------------------------------------------------------------
// Workspace

/// `<root>/components/<name>/` per component and `<root>/integration/` for the
/// integrated design (system verification runs in `integration/system/`).
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  static std::string component_subdir(std::string_view name);
  static std::string integration_subdir() { return "integration"; }
  static std::string system_subdir() { return "integration/system"; }

  /// Joins a workspace-relative path, rejecting escapes.
  std::filesystem::path resolve(std::string_view relative) const;

 private:
  std::filesystem::path root_;
};

/// Writes each file under `subdir` atomically. An existing file is first
/// copied to `.attempts/<name>.<n>` next to it (n = 1, 2, ...). Returns the
/// workspace-relative paths written. Throws PathEscapeError / IoError.
std::vector<std::string> materialize(const std::vector<gen::GeneratedFile>& files,
                                     const Workspace& ws, std::string_view subdir);

/// Archived versions of a workspace-relative file, oldest first.
std::vector<std::filesystem::path> attempt_history(const Workspace& ws,
                                                   std::string_view relative);

// ---------------------------------------------------------------------------
// Runners

enum class Stage { kLint, kUnitTest, kSystemTest };

std::string_view to_string(Stage s);

struct ToolJob {
  std::string unit;
  Stage stage = Stage::kLint;
  std::filesystem::path dir;
  /// HDL sources, absolute or relative to `dir`.
  std::vector<std::string> hdl_files;
  std::string top;
  /// Attempts consumed so far by the unit; mock fixtures key on it.
  unsigned attempt = 0;
};

class ToolRunner {
 public:
  virtual ~ToolRunner() = default;
  virtual LintReport lint(const ToolJob& job) = 0;
  virtual TestReport test(const ToolJob& job) = 0;
};

struct ToolCommands {
  std::string lint = "verilator --lint-only -Wall {files} --top-module {top}";
  std::string test = "make";
  std::string system_test = "make";
  std::string results_file = "results.xml";
  std::chrono::seconds lint_timeout{60};
  std::chrono::seconds test_timeout{300};
  /// Lines of tool output kept in report raw logs.
  std::size_t log_tail_lines = 200;
};

ToolCommands tool_commands_from_json(const nlohmann::json& j,
                                     ToolCommands base = {});

struct ProcessResult {
  int exit_code = -1;
  std::string output;
  bool timed_out = false;
};

/// Runs `command` through /bin/sh in `cwd` with stdout+stderr captured. The
/// whole process group is killed at the deadline.
ProcessResult run_process(const std::string& command, const std::filesystem::path& cwd,
                          std::chrono::milliseconds timeout);

/// Substitutes {files}, {top} and {dir}; file names are shell-quoted.
std::string expand_command(std::string_view tmpl, const ToolJob& job);

/// Throws ToolMissingError when the command's program is not executable.
void require_tool(const std::string& command);

/// Invokes the configured commands. Logs go to `lint.log` / `test.log` in the
/// job directory.
class SubprocessRunner : public ToolRunner {
 public:
  explicit SubprocessRunner(ToolCommands commands = {}) : cmd_(std::move(commands)) {}
  LintReport lint(const ToolJob& job) override;
  TestReport test(const ToolJob& job) override;

 private:
  ToolCommands cmd_;
};

/// Offline stand-in. Reports come from, in order of precedence: the in-memory
/// script, a `mock_<stage>.json` file in the job directory, then the mode.
///
/// Fixture format (same for script entries):
///   {"by_attempt": {"0": REPORT, ...}, "default": REPORT}
/// where a lint REPORT is {"log": "..."} or {"passed": bool} and a test REPORT
/// is {"results": "<xml>"}, {"passed": bool} or
/// {"tests_run": n, "failures": [{"name", "message"}]}.
/// The script is {"<unit>": {"lint" | "unit_test" | "system_test": FIXTURE}}.
///
/// For system tests a passing report copies `expected_trace.csv` to
/// `dut_trace.csv`; a failing one writes a trace with one corrupted value.
class MockRunner : public ToolRunner {
 public:
  enum class Mode { kAlwaysPass, kAlwaysFail };
  explicit MockRunner(Mode mode = Mode::kAlwaysPass,
                      nlohmann::json script = nlohmann::json::object())
      : mode_(mode), script_(std::move(script)) {}
  LintReport lint(const ToolJob& job) override;
  TestReport test(const ToolJob& job) override;

 private:
  std::optional<nlohmann::json> fixture_for(const ToolJob& job) const;
  Mode mode_;
  nlohmann::json script_;
};

/// Builds the job for a component directory and lints every `*.sv` in it.
LintReport run_lint(std::string_view component, const Workspace& ws,
                    ToolRunner& runner, unsigned attempt = 0);
TestReport run_unit_tests(std::string_view component, const Workspace& ws,
                          ToolRunner& runner, unsigned attempt = 0);

}  // namespace archloop::tools

#endif  // ARCHLOOP_TOOLRUNNERS_HPP
