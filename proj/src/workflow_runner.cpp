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

#include <atomic>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "archloop/assembler.hpp"
#include "archloop/assets.hpp"
#include "archloop/hex.hpp"
#include "archloop/paths.hpp"
#include "archloop/sysverify.hpp"
#include "archloop/workflow.hpp"

namespace archloop::wf {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Inbox

std::future<DecisionOutcome> Inbox::post_decision(input::Decision d) {
  Item item;
  item.input = std::move(d);
  item.reply.emplace();
  auto fut = item.reply->get_future();
  post(std::move(item));
  return fut;
}

void Inbox::request_stop() {
  Item item;
  item.stop = true;
  post(std::move(item));
}

void Inbox::post(Item item) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    items_.push_back(std::move(item));
  }
  cv_.notify_all();
}

std::optional<Inbox::Item> Inbox::pop(std::chrono::milliseconds timeout) {
  std::unique_lock<std::mutex> lock(mu_);
  if (!cv_.wait_for(lock, timeout, [&] { return !items_.empty(); })) return std::nullopt;
  Item item = std::move(items_.front());
  items_.pop_front();
  return item;
}

void Inbox::drain_decisions(const std::string& code, const std::string& message) {
  std::lock_guard<std::mutex> lock(mu_);
  for (auto& item : items_) {
    if (item.reply) item.reply->set_value(DecisionOutcome{false, 0, code, message});
  }
  items_.clear();
}

namespace {

// ---------------------------------------------------------------------------
// Worker pool

class Pool {
 public:
  explicit Pool(unsigned n) {
    for (unsigned i = 0; i < std::max(1u, n); ++i) {
      threads_.emplace_back([this] { work(); });
    }
  }
  ~Pool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }
  void submit(std::function<void()> fn) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      jobs_.push_back(std::move(fn));
    }
    cv_.notify_one();
  }

 private:
  void work() {
    for (;;) {
      std::function<void()> fn;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        fn = std::move(jobs_.front());
        jobs_.pop_front();
      }
      fn();
    }
  }
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  std::vector<std::thread> threads_;
  bool stop_ = false;
};

// ---------------------------------------------------------------------------
// Executors

std::vector<gen::GeneratedFile> to_generated(const std::vector<ProposedFile>& files) {
  std::vector<gen::GeneratedFile> out;
  for (const auto& f : files) out.push_back({f.path, f.content});
  return out;
}

ProposedFile path_only(const std::string& path) {
  ProposedFile f;
  f.path = path;
  return f;
}

std::string parent_of(const std::string& rel) {
  auto pos = rel.rfind('/');
  return pos == std::string::npos ? std::string() : rel.substr(0, pos);
}

std::string file_of(const std::string& rel) {
  auto pos = rel.rfind('/');
  return pos == std::string::npos ? rel : rel.substr(pos + 1);
}

const blueprint::ComponentSpec& top_spec(const RunState& s, const UnitState& u) {
  const std::string& top = u.kind == UnitKind::kSystem ? u.deps.at(0) : u.name;
  return *s.blueprint.find(top);
}

// HDL sources for a unit, as paths relative to `from` (a workspace subdir).
std::vector<std::string> design_sources(const RunState& s, const UnitState& u,
                                        const std::string& from) {
  std::string up;
  for (std::size_t i = 0, n = std::count(from.begin(), from.end(), '/') + 1; i < n; ++i) {
    up += "../";
  }
  std::vector<std::string> out;
  for (const auto& name : s.plan) {
    out.push_back(up + tools::Workspace::component_subdir(name) + "/" +
                  gen::hdl_file_name(*s.blueprint.find(name)));
  }
  out.push_back(up + fix_target(s, u));
  return out;
}

std::vector<std::string> design_sources_abs(const RunState& s, const UnitState& u,
                                            const tools::Workspace& ws) {
  std::vector<std::string> out;
  for (const auto& name : s.plan) {
    out.push_back(ws.resolve(tools::Workspace::component_subdir(name) + "/" +
                             gen::hdl_file_name(*s.blueprint.find(name)))
                      .string());
  }
  out.push_back(ws.resolve(fix_target(s, u)).string());
  return out;
}

input::GenerationDone initial_generation(const RunState& s, const UnitState& u,
                                         gen::Backend& backend, const tools::Workspace& ws) {
  input::GenerationDone done;
  done.unit = u.name;
  const auto& bp = s.blueprint;
  std::string sub = unit_subdir(s, u);
  std::vector<gen::GenerationTask> tasks;
  try {
    switch (u.kind) {
      case UnitKind::kComponent: {
        const auto& c = *bp.find(u.name);
        tasks.push_back(gen::make_component_hdl_task(bp, c));
        tasks.push_back(gen::make_component_testbench_task(bp, c, {gen::hdl_file_name(c)}));
        break;
      }
      case UnitKind::kIntegration: {
        const auto& top = top_spec(s, u);
        tasks.push_back(gen::make_integration_task(bp, top));
        tasks.push_back(gen::make_component_testbench_task(bp, top, design_sources(s, u, sub)));
        break;
      }
      case UnitKind::kSystem: {
        const auto& top = top_spec(s, u);
        tasks.push_back(gen::make_system_testbench_task(bp, top, design_sources(s, u, sub),
                                                        s.config.sysverify_cycles));
        isa::IsaConfig cfg = isa::IsaConfig::from_parameters(bp.parameters);
        std::string source(assets::get(s.config.program));
        isa::MemImage img = isa::assemble(source, cfg);
        auto trace = sysverify::golden_trace(img, s.config.sysverify_cycles, cfg);
        std::vector<gen::GeneratedFile> program = {
            {"program.asm", source},
            {"instruction.hex", isa::emit_hex(img, cfg)},
            {"expected_trace.csv", sysverify::emit_trace(trace, cfg)}};
        for (const auto& p : tools::materialize(program, ws, sub)) done.files.push_back(path_only(p));
        break;
      }
    }
    for (const auto& task : tasks) {
      gen::GenerationResult res = gen::generate(task, backend);
      done.usage.push_back(res.usage);
      for (const auto& p : tools::materialize(res.files, ws, sub)) done.files.push_back(path_only(p));
    }
  } catch (const std::exception& e) {
    done.error = e.what();
  }
  return done;
}

input::GenerationDone fix_generation(const RunState& s, const UnitState& u,
                                     gen::Backend& backend, const tools::Workspace& ws) {
  input::GenerationDone done;
  done.unit = u.name;
  done.fix = true;
  try {
    const auto& bp = s.blueprint;
    std::string target = fix_target(s, u);
    const auto& spec = u.kind == UnitKind::kComponent ? *bp.find(u.name) : top_spec(s, u);
    gen::FixRequest fr;
    fr.stage = u.last_failure.value("stage", "lint");
    fr.target = file_of(target);
    std::error_code ec;
    fs::path target_path = ws.resolve(target);
    fr.current = fs::exists(target_path, ec) ? read_file(target_path) : std::string();
    fr.diagnostics = u.last_failure.value("diagnostics", json::array());
    if (!fr.diagnostics.is_array()) fr.diagnostics = json::array({fr.diagnostics});
    if (fr.diagnostics.empty()) {
      fr.diagnostics.push_back({{"message", "stage " + fr.stage + " failed"}});
    }
    fr.attempt = u.attempts;
    fr.max_attempts = s.config.max_attempts;
    if (u.kind == UnitKind::kComponent) {
      fr.regenerate = gen::TaskKind::kComponentHdl;
      fr.base_context = gen::make_component_hdl_task(bp, spec).context;
    } else {
      fr.regenerate = gen::TaskKind::kIntegrationHdl;
      fr.base_context = gen::make_integration_task(bp, spec).context;
    }
    gen::GenerationResult res = gen::generate(gen::make_fix_task(bp, spec, fr), backend);
    done.usage.push_back(res.usage);
    std::string dir = parent_of(target);
    std::vector<ProposedFile> files;
    for (const auto& f : res.files) {
      files.push_back({dir.empty() ? f.path : dir + "/" + f.path, f.content, false, ""});
    }
    done.files = describe_files(ws, std::move(files));
  } catch (const std::exception& e) {
    done.error = e.what();
  }
  return done;
}

tools::ToolJob tool_job(const RunState& s, const UnitState& u, const tools::Workspace& ws,
                        tools::Stage stage) {
  tools::ToolJob job;
  job.unit = u.name;
  job.stage = stage;
  job.dir = ws.resolve(unit_subdir(s, u));
  job.attempt = u.attempts;
  if (u.kind == UnitKind::kComponent) {
    job.top = u.name;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(job.dir, ec)) {
      if (e.is_regular_file() && e.path().extension() == ".sv") {
        job.hdl_files.push_back(e.path().filename().string());
      }
    }
    std::sort(job.hdl_files.begin(), job.hdl_files.end());
  } else {
    job.top = top_spec(s, u).name;
    job.hdl_files = design_sources_abs(s, u, ws);
  }
  fs::create_directories(job.dir);
  return job;
}

json sysverify_compare(const RunState& s, const fs::path& dir, bool& passed) {
  isa::IsaConfig cfg = isa::IsaConfig::from_parameters(s.blueprint.parameters);
  passed = false;
  std::error_code ec;
  if (!fs::exists(dir / "dut_trace.csv", ec)) {
    return {{"verdict", "FAIL"}, {"error", "dut_trace.csv was not produced"}};
  }
  try {
    auto expected = sysverify::load_trace(read_file(dir / "expected_trace.csv"), cfg);
    auto actual = sysverify::load_trace(read_file(dir / "dut_trace.csv"), cfg);
    auto divs = sysverify::compare_traces(expected, actual);
    isa::MemImage img = isa::load_hex(read_file(dir / "instruction.hex"), cfg);
    sysverify::ReportContext ctx{&expected, &actual, &img, cfg};
    auto rep = sysverify::report(divs, ctx);
    passed = divs.empty();
    json out = rep.json;
    out["verdict"] = rep.verdict;
    return out;
  } catch (const std::exception& e) {
    return {{"verdict", "FAIL"}, {"error", e.what()}};
  }
}

tools::LintReport failed_lint(const std::string& what) {
  return tools::LintReport::from(
      {{tools::Severity::kError, "", std::nullopt, std::string("ExecutorError"), what}}, what);
}

Inbox::Item execute(const Action& a, const RunState& s, const Executors& ex,
                    const tools::Workspace& ws) {
  Inbox::Item item;
  const UnitState& u = *s.find_unit(a.unit);
  switch (a.kind) {
    case Action::Kind::kRequestGeneration:
    case Action::Kind::kIntegrate:
      item.input = a.fix ? fix_generation(s, u, *ex.backend, ws)
                         : initial_generation(s, u, *ex.backend, ws);
      break;
    case Action::Kind::kRunLint: {
      input::LintDone done{u.name, {}};
      try {
        if (!u.staged.empty()) tools::materialize(to_generated(u.staged), ws, "");
        done.report = ex.runner->lint(tool_job(s, u, ws, tools::Stage::kLint));
      } catch (const std::exception& e) {
        done.report = failed_lint(e.what());
      }
      item.input = std::move(done);
      break;
    }
    case Action::Kind::kRunTests:
    case Action::Kind::kRunSystemVerify: {
      input::TestDone done;
      done.unit = u.name;
      bool system = a.kind == Action::Kind::kRunSystemVerify;
      try {
        auto job = tool_job(s, u, ws, system ? tools::Stage::kSystemTest : tools::Stage::kUnitTest);
        done.report = ex.runner->test(job);
        if (system) done.sysverify = sysverify_compare(s, job.dir, done.sysverify_passed);
      } catch (const std::exception& e) {
        done.report = tools::TestReport::from(0, {{"ExecutorError", e.what()}}, e.what());
      }
      item.input = std::move(done);
      break;
    }
    case Action::Kind::kApplyFix: {
      const ApprovalRequest* r = s.find_request(a.request_id);
      try {
        if (r == nullptr) throw IllegalTransitionError("ApplyFix without a request");
        input::FixMaterialized done{u.name, tools::materialize(to_generated(r->proposed_fix), ws, "")};
        item.input = std::move(done);
      } catch (const std::exception& e) {
        item.fatal = std::string("cannot apply fix: ") + e.what();
      }
      break;
    }
    case Action::Kind::kAwaitHuman:
    case Action::Kind::kDone:
      break;
  }
  return item;
}

std::string action_key(const Action& a) {
  return fmt::format("{}|{}|{}", to_string(a.kind), a.unit, a.fix ? 1 : 0);
}

std::atomic<std::uint64_t> g_loop_counter{0};

}  // namespace

RunState run_to_completion(RunState s, const Executors& ex, const fs::path& run_dir,
                           RunOptions opts) {
  if (ex.backend == nullptr || ex.runner == nullptr) {
    throw ConfigError("run_to_completion needs a backend and a tool runner");
  }
  Inbox local;
  Inbox& inbox = opts.inbox ? *opts.inbox : local;
  auto clock = opts.clock ? opts.clock : std::function<std::int64_t()>(now_ms);
  const std::uint64_t loop_id = ++g_loop_counter;
  tools::Workspace ws(workspace_dir(run_dir));
  std::size_t transitions = 0;
  std::set<std::string> in_flight;

  auto commit = [&](const Input& in) {
    std::size_t before = s.events.size();
    s = advance(s, in, clock()).state;
    persist(s, run_dir);
    ++transitions;
    if (opts.on_transition) {
      std::vector<Event> added(s.events.begin() + static_cast<std::ptrdiff_t>(before),
                               s.events.end());
      opts.on_transition(s, added);
    }
  };
  auto stop_reached = [&] {
    return opts.stop_after_transitions && transitions >= *opts.stop_after_transitions;
  };

  {
    Pool pool(std::max(1u, std::min(opts.workers, static_cast<unsigned>(s.config.max_parallel))));
    commit(input::Tick{});
    while (!stop_reached()) {
      bool done = false;
      for (const Action& a : pending_actions(s)) {
        if (a.kind == Action::Kind::kDone) done = true;
        if (a.kind == Action::Kind::kDone || a.kind == Action::Kind::kAwaitHuman) continue;
        std::string key = action_key(a);
        if (in_flight.count(key)) continue;
        in_flight.insert(key);
        pool.submit([a, key, snapshot = s, &ex, &ws, &inbox, loop_id] {
          Inbox::Item item = execute(a, snapshot, ex, ws);
          item.loop = loop_id;
          item.key = key;
          inbox.post(std::move(item));
        });
      }
      if (done && in_flight.empty()) break;
      if (in_flight.empty()) {
        if (opts.scripted) {
          if (auto d = opts.scripted(s)) {
            commit(*d);
            continue;
          }
        }
        if (!(opts.inbox && opts.wait_for_decisions)) break;
      }
      auto item = inbox.pop(std::chrono::milliseconds(200));
      if (!item) continue;
      if (item->stop) break;
      if (item->reply) {
        try {
          commit(*item->input);
          item->reply->set_value(DecisionOutcome{true, s.events.back().seq, "", ""});
        } catch (const Error& e) {
          item->reply->set_value(DecisionOutcome{false, 0, e.code(), e.what()});
        }
        continue;
      }
      if (item->loop != loop_id) continue;  // left over from an earlier loop
      in_flight.erase(item->key);
      if (item->fatal) throw IoError(*item->fatal);
      if (item->input) commit(*item->input);
    }
  }
  inbox.drain_decisions("RunStopped", "the run loop is not accepting decisions");
  return s;
}

}  // namespace archloop::wf
