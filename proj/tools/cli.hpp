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

#ifndef ARCHLOOP_TOOLS_CLI_HPP
#define ARCHLOOP_TOOLS_CLI_HPP

#include <iosfwd>

namespace archloop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // run failed or escalated, check failed
inline constexpr int kExitUsage = 2;   // usage, configuration or input error
inline constexpr int kExitToolMissing = 3;

/// Runs one command line. `in` feeds interactive approvals.
int dispatch(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err);

}  // namespace archloop::cli

#endif  // ARCHLOOP_TOOLS_CLI_HPP
