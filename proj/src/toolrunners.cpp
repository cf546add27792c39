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

#include "archloop/toolrunners.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <deque>
#include <regex>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include "archloop/paths.hpp"
#include "archloop/sysverify.hpp"

namespace archloop::tools {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Severity s) {
  return s == Severity::kError ? "error" : "warning";
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kLint: return "lint";
    case Stage::kUnitTest: return "unit_test";
    case Stage::kSystemTest: return "system_test";
  }
  return "lint";
}

LintReport LintReport::from(std::vector<Diagnostic> diagnostics, std::string raw_log) {
  LintReport r;
  r.passed = std::none_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) {
    return d.severity == Severity::kError;
  });
  r.diagnostics = std::move(diagnostics);
  r.raw_log = std::move(raw_log);
  return r;
}

TestReport TestReport::from(unsigned tests_run, std::vector<TestFailure> failures,
                            std::string raw_log) {
  TestReport r;
  r.tests_run = tests_run;
  r.passed = failures.empty() && tests_run >= 1;
  r.failures = std::move(failures);
  r.raw_log = std::move(raw_log);
  return r;
}

json to_json(const Diagnostic& d) {
  json j = json::object();
  j["severity"] = to_string(d.severity);
  j["file"] = d.file;
  j["line"] = d.line ? json(*d.line) : json(nullptr);
  j["tool_code"] = d.tool_code ? json(*d.tool_code) : json(nullptr);
  j["message"] = d.message;
  return j;
}

Diagnostic diagnostic_from_json(const json& j) {
  Diagnostic d;
  std::string sev = j.value("severity", "error");
  if (sev != "error" && sev != "warning") {
    throw ValidationError("unknown diagnostic severity '" + sev + "'");
  }
  d.severity = sev == "error" ? Severity::kError : Severity::kWarning;
  d.file = j.value("file", "");
  if (j.contains("line") && !j["line"].is_null()) d.line = j["line"].get<unsigned>();
  if (j.contains("tool_code") && !j["tool_code"].is_null()) {
    d.tool_code = j["tool_code"].get<std::string>();
  }
  d.message = j.value("message", "");
  return d;
}

json to_json(const LintReport& r) {
  json diags = json::array();
  for (const auto& d : r.diagnostics) diags.push_back(to_json(d));
  return {{"passed", r.passed}, {"diagnostics", diags}, {"raw_log", r.raw_log}};
}

LintReport lint_report_from_json(const json& j) {
  std::vector<Diagnostic> diags;
  for (const auto& d : j.value("diagnostics", json::array())) {
    diags.push_back(diagnostic_from_json(d));
  }
  return LintReport::from(std::move(diags), j.value("raw_log", ""));
}

json to_json(const TestReport& r) {
  json failures = json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"name", f.name}, {"message", f.message}});
  }
  return {{"passed", r.passed},
          {"tests_run", r.tests_run},
          {"failures", failures},
          {"raw_log", r.raw_log}};
}

TestReport test_report_from_json(const json& j) {
  std::vector<TestFailure> failures;
  for (const auto& f : j.value("failures", json::array())) {
    failures.push_back({f.value("name", ""), f.value("message", "")});
  }
  return TestReport::from(j.value("tests_run", 0u), std::move(failures),
                          j.value("raw_log", ""));
}

// ---------------------------------------------------------------------------
// Parsers

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

std::vector<Diagnostic> parse_lint_log(std::string_view log) {
  static const std::regex head(R"(^%(Error|Warning)(?:-([A-Za-z0-9_]+))?:\s*(.*)$)");
  static const std::regex located(R"(^([^:\s][^:]*):(\d+)(?::\d+)?:\s*(.*)$)");
  std::vector<Diagnostic> out;
  std::istringstream in{std::string(log)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, head)) continue;
    std::string rest = m[3].str();
    if (rest.rfind("Exiting due to", 0) == 0) continue;
    Diagnostic d;
    d.severity = m[1] == "Error" ? Severity::kError : Severity::kWarning;
    if (m[2].matched) d.tool_code = m[2].str();
    std::smatch loc;
    if (std::regex_match(rest, loc, located)) {
      d.file = loc[1].str();
      d.line = static_cast<unsigned>(std::stoul(loc[2].str()));
      d.message = trim(loc[3].str());
    } else {
      d.message = trim(rest);
    }
    if (d.message.empty()) d.message = d.tool_code.value_or(std::string(to_string(d.severity)));
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

namespace pt = boost::property_tree;

std::string failure_text(const pt::ptree& node) {
  std::string msg = node.get<std::string>("<xmlattr>.message", "");
  std::string body = trim(node.get_value<std::string>(""));
  if (msg.empty()) msg = body;
  else if (!body.empty() && body != msg) msg += ": " + body;
  return msg.empty() ? "failed" : msg;
}

void collect_cases(const pt::ptree& suite, unsigned& run, std::vector<TestFailure>& failures) {
  for (const auto& [tag, child] : suite) {
    if (tag == "testsuite") {
      collect_cases(child, run, failures);
    } else if (tag == "testcase") {
      if (child.count("skipped") > 0) continue;
      ++run;
      std::string name = child.get<std::string>("<xmlattr>.name", "");
      for (const auto& [ctag, cnode] : child) {
        if (ctag == "failure" || ctag == "error") {
          failures.push_back({name, failure_text(cnode)});
          break;
        }
      }
    }
  }
}

}  // namespace

TestReport parse_test_results(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw FormatError(std::string("malformed test results: ") + e.what());
  }
  unsigned run = 0;
  std::vector<TestFailure> failures;
  if (auto suites = tree.get_child_optional("testsuites")) {
    collect_cases(*suites, run, failures);
  } else if (tree.get_child_optional("testsuite")) {
    collect_cases(tree, run, failures);
  } else {
    throw FormatError("test results have no testsuites or testsuite root");
  }
  return TestReport::from(run, std::move(failures), "");
}

// ---------------------------------------------------------------------------
// Workspace

std::string Workspace::component_subdir(std::string_view name) {
  return "components/" + std::string(name);
}

fs::path Workspace::resolve(std::string_view relative) const {
  return confine(root_, relative);
}

namespace {

fs::path archive_path(const fs::path& file, unsigned n) {
  return file.parent_path() / ".attempts" /
         (file.filename().string() + "." + std::to_string(n));
}

}  // namespace

std::vector<std::string> materialize(const std::vector<gen::GeneratedFile>& files,
                                     const Workspace& ws, std::string_view subdir) {
  // Check every path first so nothing is written for a bad batch.
  std::vector<std::string> rel;
  for (const auto& f : files) {
    std::string r = subdir.empty() ? f.path : std::string(subdir) + "/" + f.path;
    if (!is_safe_relative_path(f.path) || !is_safe_relative_path(r)) {
      throw PathEscapeError(f.path);
    }
    rel.push_back(fs::path(r).lexically_normal().generic_string());
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    fs::path target = ws.resolve(rel[i]);
    std::error_code ec;
    if (fs::exists(target, ec)) {
      unsigned n = 1;
      while (fs::exists(archive_path(target, n), ec)) ++n;
      write_file_atomic(archive_path(target, n), read_file(target));
    }
    write_file_atomic(target, files[i].content);
  }
  return rel;
}

std::vector<fs::path> attempt_history(const Workspace& ws, std::string_view relative) {
  fs::path target = ws.resolve(relative);
  std::vector<fs::path> out;
  std::error_code ec;
  for (unsigned n = 1; fs::exists(archive_path(target, n), ec); ++n) {
    out.push_back(archive_path(target, n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subprocesses

ToolCommands tool_commands_from_json(const json& j, ToolCommands base) {
  if (!j.is_object()) throw ConfigError("tool configuration must be an object");
  try {
    if (j.contains("lint")) base.lint = j["lint"].get<std::string>();
    if (j.contains("test")) base.test = j["test"].get<std::string>();
    if (j.contains("system_test")) base.system_test = j["system_test"].get<std::string>();
    if (j.contains("results_file")) base.results_file = j["results_file"].get<std::string>();
    if (j.contains("lint_timeout_s")) {
      base.lint_timeout = std::chrono::seconds(j["lint_timeout_s"].get<unsigned>());
    }
    if (j.contains("test_timeout_s")) {
      base.test_timeout = std::chrono::seconds(j["test_timeout_s"].get<unsigned>());
    }
    if (j.contains("log_tail_lines")) base.log_tail_lines = j["log_tail_lines"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad tool configuration: ") + e.what());
  }
  return base;
}

ProcessResult run_process(const std::string& command, const fs::path& cwd,
                          std::chrono::milliseconds timeout) {
  int fds[2];
  if (::pipe(fds) != 0) throw IoError("pipe failed");
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw IoError("fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(fds[1], STDOUT_FILENO);
    ::dup2(fds[1], STDERR_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(127);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(fds[1]);

  ProcessResult result;
  auto deadline = std::chrono::steady_clock::now() + timeout;
  char buf[4096];
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd p{fds[0], POLLIN, 0};
    int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) continue;
    ssize_t n = ::read(fds[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    result.output.append(buf, static_cast<std::size_t>(n));
  }
  if (result.timed_out) ::kill(-pid, SIGKILL);
  ::close(fds[0]);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (result.timed_out) {
    result.exit_code = -1;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

namespace {

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
}

std::string tail_lines(const std::string& text, std::size_t keep) {
  std::size_t count = 0;
  std::size_t pos = text.size();
  if (pos > 0 && text[pos - 1] == '\n') --pos;
  while (pos > 0) {
    std::size_t nl = text.rfind('\n', pos - 1);
    if (nl == std::string::npos) return text;
    if (++count == keep) return text.substr(nl + 1);
    pos = nl;
  }
  return text;
}

}  // namespace

std::string expand_command(std::string_view tmpl, const ToolJob& job) {
  std::string files;
  for (const auto& f : job.hdl_files) {
    if (!files.empty()) files += ' ';
    files += shell_quote(f);
  }
  std::string out(tmpl);
  replace_all(out, "{files}", files);
  replace_all(out, "{top}", shell_quote(job.top));
  replace_all(out, "{dir}", shell_quote(job.dir.string()));
  return out;
}

void require_tool(const std::string& command) {
  std::istringstream in(command);
  std::string program;
  // Skip leading VAR=value assignments.
  while (in >> program && program.find('=') != std::string::npos &&
         program.find('/') == std::string::npos) {
  }
  if (program.empty()) throw ConfigError("empty tool command");
  if (program.find('/') != std::string::npos) {
    if (::access(program.c_str(), X_OK) != 0) throw ToolMissingError(program);
    return;
  }
  const char* path = std::getenv("PATH");
  std::istringstream dirs(path ? path : "");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) dir = ".";
    fs::path candidate = fs::path(dir) / program;
    struct stat st{};
    if (::stat(candidate.c_str(), &st) == 0 && S_ISREG(st.st_mode) &&
        ::access(candidate.c_str(), X_OK) == 0) {
      return;
    }
  }
  throw ToolMissingError(program);
}

LintReport SubprocessRunner::lint(const ToolJob& job) {
  std::string command = expand_command(cmd_.lint, job);
  require_tool(command);
  ProcessResult pr = run_process(command, job.dir, cmd_.lint_timeout);
  write_file_atomic(job.dir / "lint.log", pr.output);
  std::vector<Diagnostic> diags = parse_lint_log(pr.output);
  if (pr.timed_out) {
    diags.push_back({Severity::kError, "", std::nullopt, std::string("Timeout"),
                     fmt::format("lint exceeded {}s", cmd_.lint_timeout.count())});
  } else if (pr.exit_code != 0 && diags.empty()) {
    // Warnings alone also give a non-zero exit under -Wall.
    diags.push_back({Severity::kError, "", std::nullopt, std::nullopt,
                     fmt::format("lint exited with code {}", pr.exit_code)});
  }
  return LintReport::from(std::move(diags), tail_lines(pr.output, cmd_.log_tail_lines));
}

TestReport SubprocessRunner::test(const ToolJob& job) {
  const std::string& tmpl = job.stage == Stage::kSystemTest ? cmd_.system_test : cmd_.test;
  std::string command = expand_command(tmpl, job);
  require_tool(command);
  fs::path results = job.dir / cmd_.results_file;
  std::error_code ec;
  fs::remove(results, ec);
  ProcessResult pr = run_process(command, job.dir, cmd_.test_timeout);
  write_file_atomic(job.dir / "test.log", pr.output);
  std::string log = tail_lines(pr.output, cmd_.log_tail_lines);
  if (pr.timed_out) {
    return TestReport::from(0, {{"Timeout", fmt::format("tests exceeded {}s",
                                                        cmd_.test_timeout.count())}},
                            log);
  }
  if (!fs::exists(results, ec)) {
    return TestReport::from(
        0, {{"ResultsMissing", fmt::format("{} not produced (exit code {})",
                                           cmd_.results_file, pr.exit_code)}},
        log);
  }
  TestReport r;
  try {
    r = parse_test_results(read_file(results));
  } catch (const FormatError& e) {
    return TestReport::from(0, {{"ResultsMalformed", e.what()}}, log);
  }
  if (pr.exit_code != 0 && r.passed) {
    r.failures.push_back({"exit", fmt::format("test command exited with code {}", pr.exit_code)});
  }
  return TestReport::from(r.tests_run, std::move(r.failures), log);
}

// ---------------------------------------------------------------------------
// Mock runner

namespace {

LintReport lint_from_fixture(const json& f) {
  if (f.contains("log")) {
    std::string log = f["log"].get<std::string>();
    return LintReport::from(parse_lint_log(log), log);
  }
  if (f.contains("diagnostics")) return lint_report_from_json(f);
  if (f.value("passed", true)) return LintReport::from({}, "");
  return LintReport::from(
      {{Severity::kError, "", std::nullopt, std::string("MOCK"), "mock lint failure"}},
      "%Error-MOCK: mock lint failure\n");
}

TestReport test_from_fixture(const json& f) {
  if (f.contains("results")) {
    TestReport r = parse_test_results(f["results"].get<std::string>());
    r.raw_log = f.value("log", "");
    return r;
  }
  if (f.contains("failures") || f.contains("tests_run")) {
    json copy = f;
    if (!copy.contains("tests_run")) copy["tests_run"] = 1;
    return test_report_from_json(copy);
  }
  if (f.value("passed", true)) return TestReport::from(1, {}, "");
  return TestReport::from(1, {{"mock_test", "mock test failure"}}, "mock test failure\n");
}

const json* pick(const json& fixture, unsigned attempt) {
  std::string key = std::to_string(attempt);
  if (fixture.contains("by_attempt") && fixture["by_attempt"].contains(key)) {
    return &fixture["by_attempt"][key];
  }
  if (fixture.contains("default")) return &fixture["default"];
  return nullptr;
}

void write_dut_trace(const fs::path& dir, bool corrupt) {
  fs::path expected = dir / "expected_trace.csv";
  std::error_code ec;
  if (!fs::exists(expected, ec)) return;
  std::string text = read_file(expected);
  if (corrupt) {
    sysverify::DebugTrace t = sysverify::load_trace(text);
    if (!t.empty()) {
      auto& rec = t[std::min<std::size_t>(2, t.size() - 1)];
      rec.debug_alu_result = (rec.debug_alu_result ^ 0x01u) & 0xFFu;
    }
    text = sysverify::emit_trace(t);
  }
  write_file_atomic(dir / "dut_trace.csv", text);
}

}  // namespace

std::optional<json> MockRunner::fixture_for(const ToolJob& job) const {
  std::string stage(to_string(job.stage));
  if (script_.is_object() && script_.contains(job.unit) &&
      script_[job.unit].contains(stage)) {
    if (const json* f = pick(script_[job.unit][stage], job.attempt)) return *f;
  }
  fs::path file = job.dir / ("mock_" + stage + ".json");
  std::error_code ec;
  if (fs::exists(file, ec)) {
    json doc;
    try {
      doc = json::parse(read_file(file));
    } catch (const json::exception& e) {
      throw ConfigError("bad mock fixture " + file.string() + ": " + e.what());
    }
    if (const json* f = pick(doc, job.attempt)) return *f;
  }
  return std::nullopt;
}

LintReport MockRunner::lint(const ToolJob& job) {
  std::optional<json> f = fixture_for(job);
  LintReport r = f ? lint_from_fixture(*f)
                   : lint_from_fixture({{"passed", mode_ == Mode::kAlwaysPass}});
  if (!job.dir.empty()) write_file_atomic(job.dir / "lint.log", r.raw_log);
  return r;
}

TestReport MockRunner::test(const ToolJob& job) {
  std::optional<json> f = fixture_for(job);
  TestReport r;
  bool corrupt_trace = false;
  if (f) {
    r = test_from_fixture(*f);
    corrupt_trace = !r.passed || f->value("corrupt_trace", false);
  } else {
    bool pass = mode_ == Mode::kAlwaysPass;
    r = test_from_fixture({{"passed", pass}});
    corrupt_trace = !pass;
  }
  if (!job.dir.empty()) {
    write_file_atomic(job.dir / "test.log", r.raw_log);
    if (job.stage == Stage::kSystemTest) write_dut_trace(job.dir, corrupt_trace);
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

ToolJob component_job(std::string_view component, const Workspace& ws, Stage stage,
                      unsigned attempt) {
  ToolJob job;
  job.unit = std::string(component);
  job.stage = stage;
  job.dir = ws.resolve(Workspace::component_subdir(component));
  job.top = std::string(component);
  job.attempt = attempt;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(job.dir, ec)) {
    if (e.is_regular_file() && e.path().extension() == ".sv") {
      job.hdl_files.push_back(e.path().filename().string());
    }
  }
  if (ec) throw IoError("cannot list " + job.dir.string(), true);
  std::sort(job.hdl_files.begin(), job.hdl_files.end());
  return job;
}

}  // namespace

LintReport run_lint(std::string_view component, const Workspace& ws, ToolRunner& runner,
                    unsigned attempt) {
  return runner.lint(component_job(component, ws, Stage::kLint, attempt));
}

TestReport run_unit_tests(std::string_view component, const Workspace& ws,
                          ToolRunner& runner, unsigned attempt) {
  return runner.test(component_job(component, ws, Stage::kUnitTest, attempt));
}

}  // namespace archloop::tools
