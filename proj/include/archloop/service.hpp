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

#ifndef ARCHLOOP_SERVICE_HPP
#define ARCHLOOP_SERVICE_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "archloop/errors.hpp"
#include "archloop/genbackend.hpp"
#include "archloop/toolrunners.hpp"
#include "archloop/workflow.hpp"
#include "json.hpp"

// HTTP front of the workflow: run summaries, event streams, workspace files,
// approval diffs and decision submission.
namespace archloop::service {

inline constexpr int kApiSchemaVersion = 1;

/// Read-only projection of a run used by list and get.
nlohmann::json run_summary(const wf::RunState& s);

/// HTTP status for an error code (`NotFound` -> 404 and so on).
int http_status(const std::string& code);

struct ServiceOptions {
  /// Each run lives in `<runs_root>/<run_id>`.
  std::filesystem::path runs_root;
  /// Shared bearer token. Empty disables authentication.
  std::string token;
  std::shared_ptr<gen::Backend> backend;
  std::shared_ptr<tools::ToolRunner> runner;
  /// Config for runs created through the API (merged with the request body).
  wf::WorkflowConfig defaults;
  unsigned workers = 4;
  std::size_t recent_events = 50;
  /// Longest a stream waits for new events before polling again.
  std::chrono::milliseconds stream_poll{250};
  /// Events written per chunk of an event stream.
  std::size_t stream_batch = 256;
  std::chrono::seconds decision_timeout{30};
};

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // The operations behind the endpoints. All throw archloop::Error.
  nlohmann::json list_runs();
  nlohmann::json get_run(const std::string& run_id);
  nlohmann::json get_file(const std::string& run_id, const std::string& path);
  std::string get_diff(const std::string& request_id);
  nlohmann::json submit_decision(const std::string& run_id, const nlohmann::json& body);
  nlohmann::json create_run(const nlohmann::json& body);
  nlohmann::json resume(const std::string& run_id);

  /// Starts the control loop of a persisted run unless it is already hosted.
  void host(const std::string& run_id);
  bool is_hosted(const std::string& run_id);
  /// Latest state (in memory when hosted, else from disk).
  wf::RunState snapshot(const std::string& run_id);
  /// Blocks until `pred` holds for the run or the timeout passes.
  bool wait_for(const std::string& run_id, const std::function<bool(const wf::RunState&)>& pred,
                std::chrono::milliseconds timeout);
  /// Events with seq > `since`, at most `max` of them. Waits up to `timeout`
  /// when there are none yet.
  std::vector<wf::Event> events_since(const std::string& run_id, std::uint64_t since,
                                      std::size_t max, std::chrono::milliseconds timeout);

  /// Binds the HTTP listener; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  /// Serves on a background thread after bind().
  void start();
  /// Stops the listener and every hosted loop.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace archloop::service

#endif  // ARCHLOOP_SERVICE_HPP
