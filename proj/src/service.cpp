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

#include "archloop/service.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <openssl/crypto.h>

#include "archloop/paths.hpp"
#include "httplib.h"

namespace archloop::service {

namespace fs = std::filesystem;
using nlohmann::json;

json run_summary(const wf::RunState& s) {
  json phases = json::object();
  json attempts = json::object();
  for (const auto& u : s.units) {
    phases[u.name] = wf::to_string(u.phase);
    attempts[u.name] = u.attempts;
  }
  json usage = gen::to_json(s.ledger);
  usage["budget"] = s.config.token_budget;
  usage["over_budget"] = s.ledger.over_budget(s.config.token_budget);
  return {{"schema_version", kApiSchemaVersion},
          {"run_id", s.run_id},
          {"project_name", s.blueprint.project_name},
          {"phases", phases},
          {"attempts", attempts},
          {"max_attempts", s.config.max_attempts},
          {"pending_approvals", wf::pending_approvals(s).size()},
          {"usage", usage},
          {"verdict", wf::verdict(s)},
          {"terminal", wf::is_terminal(s)},
          {"last_seq", s.events.empty() ? 0 : s.events.back().seq}};
}

int http_status(const std::string& code) {
  if (code == "NotFound") return 404;
  if (code == "Unauthorized") return 401;
  if (code == "StaleRequest" || code == "IllegalTransition" || code == "RunStopped") return 409;
  if (code == "Timeout") return 504;
  if (code == "CorruptState" || code == "IoError" || code == "Internal") return 500;
  return 400;
}

namespace {

struct RunHandle {
  std::string id;
  fs::path dir;
  std::mutex mu;
  std::condition_variable cv;
  // Serializes host() so only one loop is ever started.
  std::mutex host_mu;
  bool hosted = false;
  std::optional<wf::RunState> live;
  std::unique_ptr<wf::Inbox> inbox;
  std::thread loop;
  std::string last_error;
};

bool valid_run_id(const std::string& id) {
  return !id.empty() && id.find('/') == std::string::npos && is_safe_relative_path(id);
}

json event_line(const wf::Event& e) {
  json j = wf::to_json(e);
  j["schema_version"] = wf::kSchemaVersion;
  return j;
}

json error_body(const std::string& code, const std::string& message) {
  return {{"code", code}, {"message", message}};
}

}  // namespace

struct Service::Impl {
  ServiceOptions opt;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<RunHandle>> handles;
  std::atomic<bool> stopping{false};
  httplib::Server server;
  std::thread server_thread;
  bool bound = false;

  std::shared_ptr<RunHandle> handle(const std::string& id) {
    if (!valid_run_id(id)) throw IoError("unknown run '" + id + "'", true);
    std::lock_guard<std::mutex> lock(mu);
    auto it = handles.find(id);
    if (it != handles.end()) return it->second;
    fs::path dir = opt.runs_root / id;
    std::error_code ec;
    if (!fs::exists(dir / "state.json", ec)) throw IoError("unknown run '" + id + "'", true);
    auto h = std::make_shared<RunHandle>();
    h->id = id;
    h->dir = dir;
    handles[id] = h;
    return h;
  }

  wf::RunState current(RunHandle& h) {
    {
      std::lock_guard<std::mutex> lock(h.mu);
      if (h.hosted && h.live) return *h.live;
    }
    return wf::load(h.dir);
  }

  void host(const std::shared_ptr<RunHandle>& h) {
    std::lock_guard<std::mutex> host_lock(h->host_mu);
    {
      std::lock_guard<std::mutex> lock(h->mu);
      if (h->hosted) return;
    }
    if (stopping) throw Error("RunStopped", "the service is shutting down");
    if (!opt.backend || !opt.runner) throw ConfigError("the service has no executors configured");
    if (h->loop.joinable()) h->loop.join();
    wf::RunState s = wf::load(h->dir);
    {
      std::lock_guard<std::mutex> lock(h->mu);
      h->live = s;
      h->hosted = true;
      h->inbox = std::make_unique<wf::Inbox>();
      h->last_error.clear();
    }
    wf::Inbox* inbox = h->inbox.get();
    h->loop = std::thread([this, h, inbox, s = std::move(s)]() mutable {
      wf::RunOptions ro;
      ro.workers = opt.workers;
      ro.inbox = inbox;
      ro.wait_for_decisions = true;
      ro.on_transition = [h](const wf::RunState& st, const std::vector<wf::Event>&) {
        {
          std::lock_guard<std::mutex> lock(h->mu);
          h->live = st;
        }
        h->cv.notify_all();
      };
      std::string error;
      try {
        wf::run_to_completion(std::move(s), {opt.backend.get(), opt.runner.get()}, h->dir, ro);
      } catch (const std::exception& e) {
        error = e.what();
      }
      {
        std::lock_guard<std::mutex> lock(h->mu);
        h->hosted = false;
        h->last_error = error;
        inbox->drain_decisions("RunStopped", "the run loop has stopped");
      }
      h->cv.notify_all();
    });
  }

  std::vector<std::string> run_ids() {
    std::set<std::string> ids;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(opt.runs_root, ec)) {
      std::error_code ec2;
      if (e.is_directory(ec2) && fs::exists(e.path() / "state.json", ec2)) {
        ids.insert(e.path().filename().string());
      }
    }
    std::lock_guard<std::mutex> lock(mu);
    for (const auto& [id, h] : handles) ids.insert(id);
    return {ids.begin(), ids.end()};
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->opt = std::move(options);
  std::error_code ec;
  fs::create_directories(impl_->opt.runs_root, ec);
  if (ec) throw IoError("cannot create " + impl_->opt.runs_root.string() + ": " + ec.message());
}

Service::~Service() { stop(); }

json Service::list_runs() {
  json out = json::array();
  for (const auto& id : impl_->run_ids()) {
    try {
      out.push_back(run_summary(impl_->current(*impl_->handle(id))));
    } catch (const Error& e) {
      out.push_back({{"schema_version", kApiSchemaVersion},
                     {"run_id", id},
                     {"error", error_body(e.code(), e.what())}});
    }
  }
  return out;
}

json Service::get_run(const std::string& run_id) {
  auto h = impl_->handle(run_id);
  wf::RunState s = impl_->current(*h);
  json out = run_summary(s);
  json events = json::array();
  std::size_t n = s.events.size();
  std::size_t from = n > impl_->opt.recent_events ? n - impl_->opt.recent_events : 0;
  for (std::size_t i = from; i < n; ++i) events.push_back(event_line(s.events[i]));
  out["events"] = events;
  json approvals = json::array();
  for (const auto* r : wf::pending_approvals(s)) approvals.push_back(wf::to_json(*r));
  out["approvals"] = approvals;
  json units = json::array();
  for (const auto& u : s.units) {
    units.push_back({{"name", u.name},
                     {"kind", wf::to_string(u.kind)},
                     {"phase", wf::to_string(u.phase)},
                     {"attempts", u.attempts},
                     {"deps", u.deps},
                     {"request", u.request ? json(*u.request) : json(nullptr)}});
  }
  out["units"] = units;
  return out;
}

json Service::get_file(const std::string& run_id, const std::string& path) {
  auto h = impl_->handle(run_id);
  if (!is_safe_relative_path(path)) throw PathEscapeError(path);
  tools::Workspace ws(wf::workspace_dir(h->dir));
  fs::path target = ws.resolve(path);
  std::error_code ec;
  if (!fs::is_regular_file(target, ec)) throw IoError("no file '" + path + "' in run " + run_id, true);
  json attempts = json::array();
  unsigned n = 0;
  for (const auto& p : tools::attempt_history(ws, path)) {
    attempts.push_back({{"attempt", ++n}, {"content", read_file(p)}});
  }
  return {{"schema_version", kApiSchemaVersion},
          {"run_id", run_id},
          {"path", path},
          {"content", read_file(target)},
          {"attempts", attempts}};
}

std::string Service::get_diff(const std::string& request_id) {
  for (const auto& id : impl_->run_ids()) {
    if (request_id.rfind(id + "-r", 0) != 0) continue;
    auto h = impl_->handle(id);
    wf::RunState s = impl_->current(*h);
    const wf::ApprovalRequest* r = s.find_request(request_id);
    if (r == nullptr) continue;
    tools::Workspace ws(wf::workspace_dir(h->dir));
    std::string out;
    for (const auto& f : wf::describe_files(ws, r->proposed_fix)) out += f.diff;
    return out;
  }
  throw wf::UnknownRequestError(request_id);
}

json Service::submit_decision(const std::string& run_id, const json& body) {
  auto h = impl_->handle(run_id);
  if (!body.is_object()) throw ValidationError("decision body must be a JSON object");
  wf::input::Decision d;
  try {
    d.request_id = body.at("request_id").get<std::string>();
    std::string v = body.at("verdict").get<std::string>();
    auto verdict = wf::verdict_from_string(v);
    if (!verdict) throw ValidationError("verdict must be approve, reject or edit, not '" + v + "'");
    d.verdict = *verdict;
    d.note = body.value("note", "");
    for (const auto& f : body.value("files", json::array())) {
      wf::ProposedFile pf;
      pf.path = f.at("path").get<std::string>();
      pf.content = f.at("content").get<std::string>();
      if (!is_safe_relative_path(pf.path)) {
        throw ValidationError("edit path escapes the run workspace: '" + pf.path + "'");
      }
      d.files.push_back(std::move(pf));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed decision: ") + e.what());
  }
  if (d.verdict == wf::input::Decision::Verdict::kEdit) {
    if (d.files.empty()) throw ValidationError("an edit must supply at least one file");
    d.files = wf::describe_files(tools::Workspace(wf::workspace_dir(h->dir)), std::move(d.files));
  }

  // Cheap checks against the latest state give stable answers even when no
  // loop is running; the loop re-checks when it applies the decision.
  wf::RunState s = impl_->current(*h);
  const wf::ApprovalRequest* r = s.find_request(d.request_id);
  if (r == nullptr) throw wf::UnknownRequestError(d.request_id);
  if (r->status != "pending") throw wf::StaleRequestError(r->id, r->status);

  impl_->host(h);
  std::future<wf::DecisionOutcome> fut;
  {
    std::lock_guard<std::mutex> lock(h->mu);
    if (!h->hosted) throw Error("RunStopped", "the run loop has stopped");
    fut = h->inbox->post_decision(std::move(d));
  }
  if (fut.wait_for(impl_->opt.decision_timeout) != std::future_status::ready) {
    throw Error("Timeout", "the run loop did not answer in time");
  }
  wf::DecisionOutcome o = fut.get();
  if (!o.ok) throw Error(o.code, o.message);
  return {{"schema_version", kApiSchemaVersion},
          {"run_id", run_id},
          {"request_id", r->id},
          {"seq", o.seq}};
}

json Service::create_run(const json& body) {
  if (!body.is_object()) throw ValidationError("run body must be a JSON object");
  json bp_doc = body.contains("blueprint") ? body["blueprint"] : body;
  json cfg_doc = body.value("config", json::object());
  blueprint::Blueprint bp = bp_doc.is_string() ? blueprint::parse_blueprint(bp_doc.get<std::string>())
                                               : blueprint::parse_blueprint_json(bp_doc);
  wf::WorkflowConfig cfg = wf::workflow_config_from_json(cfg_doc, impl_->opt.defaults);
  std::string id;
  std::error_code ec;
  do {
    id = wf::make_run_id(bp.project_name);
  } while (fs::exists(impl_->opt.runs_root / id, ec));
  wf::RunState s = wf::plan_run(bp, cfg, id, wf::now_ms());
  wf::persist(s, impl_->opt.runs_root / id);
  impl_->host(impl_->handle(id));
  json out = run_summary(s);
  return out;
}

json Service::resume(const std::string& run_id) {
  auto h = impl_->handle(run_id);
  impl_->host(h);
  return run_summary(impl_->current(*h));
}

void Service::host(const std::string& run_id) { impl_->host(impl_->handle(run_id)); }

bool Service::is_hosted(const std::string& run_id) {
  auto h = impl_->handle(run_id);
  std::lock_guard<std::mutex> lock(h->mu);
  return h->hosted;
}

wf::RunState Service::snapshot(const std::string& run_id) {
  return impl_->current(*impl_->handle(run_id));
}

bool Service::wait_for(const std::string& run_id,
                       const std::function<bool(const wf::RunState&)>& pred,
                       std::chrono::milliseconds timeout) {
  auto h = impl_->handle(run_id);
  auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (pred(impl_->current(*h))) return true;
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return false;
    std::unique_lock<std::mutex> lock(h->mu);
    h->cv.wait_for(lock, std::min<std::chrono::steady_clock::duration>(
                             deadline - now, std::chrono::milliseconds(100)));
  }
}

std::vector<wf::Event> Service::events_since(const std::string& run_id, std::uint64_t since,
                                             std::size_t max, std::chrono::milliseconds timeout) {
  auto h = impl_->handle(run_id);
  auto take = [&](const wf::RunState& s) {
    std::vector<wf::Event> out;
    for (std::size_t i = since; i < s.events.size() && out.size() < max; ++i) {
      out.push_back(s.events[i]);
    }
    return out;
  };
  auto out = take(impl_->current(*h));
  if (!out.empty() || timeout.count() == 0) return out;
  {
    std::unique_lock<std::mutex> lock(h->mu);
    h->cv.wait_for(lock, timeout, [&] {
      return impl_->stopping.load() || (h->hosted && h->live && h->live->events.size() > since);
    });
  }
  return take(impl_->current(*h));
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message,
                json extra = json::object()) {
  json body = error_body(code, message);
  body["schema_version"] = kApiSchemaVersion;
  for (auto it = extra.begin(); it != extra.end(); ++it) body[it.key()] = it.value();
  send_json(res, http_status(code), body);
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const wf::PlanError& e) {
    json diags = json::array();
    for (const auto& d : e.diagnostics()) diags.push_back(blueprint::to_json(d));
    send_error(res, e.code(), e.what(), {{"diagnostics", diags}});
  } catch (const Error& e) {
    send_error(res, e.code(), e.what());
  } catch (const json::exception& e) {
    send_error(res, "ValidationError", std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, "Internal", e.what());
  }
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
  }
}

bool token_matches(const std::string& header, const std::string& token) {
  std::string expected = "Bearer " + token;
  return header.size() == expected.size() &&
         CRYPTO_memcmp(header.data(), expected.data(), expected.size()) == 0;
}

}  // namespace

int Service::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  Service* self = this;
  svr.new_task_queue = [] { return new httplib::ThreadPool(32); };
  svr.set_write_timeout(5, 0);

  svr.set_pre_routing_handler([self](const httplib::Request& req, httplib::Response& res) {
    const std::string& token = self->impl_->opt.token;
    if (token.empty()) return httplib::Server::HandlerResponse::Unhandled;
    if (token_matches(req.get_header_value("Authorization"), token)) {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    res.set_header("WWW-Authenticate", "Bearer");
    send_error(res, "Unauthorized", "missing or wrong bearer token");
    return httplib::Server::HandlerResponse::Handled;
  });

  svr.Get("/runs", [self](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, self->list_runs()); });
  });
  svr.Post("/runs", [self](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 201, self->create_run(parse_body(req))); });
  });
  svr.Get(R"(/runs/([^/]+))", [self](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, self->get_run(req.matches[1])); });
  });
  svr.Post(R"(/runs/([^/]+)/resume)", [self](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, self->resume(req.matches[1])); });
  });
  svr.Post(R"(/runs/([^/]+)/decisions)",
           [self](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               send_json(res, 200, self->submit_decision(req.matches[1], parse_body(req)));
             });
           });
  svr.Get(R"(/runs/([^/]+)/files)", [self](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("path")) throw ValidationError("missing 'path' query parameter");
      send_json(res, 200, self->get_file(req.matches[1], req.get_param_value("path")));
    });
  });
  svr.Get(R"(/approvals/([^/]+)/diff)", [self](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      res.status = 200;
      res.set_header("X-Schema-Version", std::to_string(kApiSchemaVersion));
      res.set_content(self->get_diff(req.matches[1]), "text/x-diff");
    });
  });
  svr.Get(R"(/runs/([^/]+)/events)", [self](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::string id = req.matches[1];
      std::uint64_t since = 0;
      if (req.has_param("since")) {
        const std::string v = req.get_param_value("since");
        try {
          std::size_t used = 0;
          since = std::stoull(v, &used);
          if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
          throw ValidationError("'since' must be a non-negative integer");
        }
      }
      self->impl_->handle(id);  // NotFound before the stream starts
      auto cursor = std::make_shared<std::uint64_t>(since);
      res.status = 200;
      res.set_header("X-Schema-Version", std::to_string(kApiSchemaVersion));
      res.set_chunked_content_provider(
          "application/x-ndjson", [self, id, cursor](std::size_t, httplib::DataSink& sink) {
            auto& opt = self->impl_->opt;
            if (self->impl_->stopping) {
              sink.done();
              return true;
            }
            std::vector<wf::Event> evs;
            wf::RunState s;
            try {
              evs = self->events_since(id, *cursor, opt.stream_batch, opt.stream_poll);
              if (evs.empty()) s = self->snapshot(id);
            } catch (const std::exception&) {
              return false;
            }
            if (evs.empty()) {
              if (wf::is_terminal(s) && s.events.size() <= *cursor) sink.done();
              return true;
            }
            std::string chunk;
            for (const auto& e : evs) chunk += event_line(e).dump() + "\n";
            if (!sink.write(chunk.data(), chunk.size())) return false;
            *cursor = evs.back().seq;
            return true;
          });
    });
  });

  int bound_port = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
  if (bound_port < 0) throw IoError(fmt::format("cannot listen on {}:{}", host, port));
  impl_->bound = true;
  return bound_port;
}

void Service::start() {
  if (!impl_->bound) throw ConfigError("bind() must be called before start()");
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Service::stop() {
  if (impl_->stopping.exchange(true)) return;
  std::vector<std::shared_ptr<RunHandle>> hs;
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    for (auto& [id, h] : impl_->handles) hs.push_back(h);
  }
  for (auto& h : hs) h->cv.notify_all();
  if (impl_->bound) impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
  for (auto& h : hs) {
    std::lock_guard<std::mutex> host_lock(h->host_mu);
    {
      std::lock_guard<std::mutex> lock(h->mu);
      if (h->hosted && h->inbox) h->inbox->request_stop();
    }
    if (h->loop.joinable()) h->loop.join();
  }
}

}  // namespace archloop::service
