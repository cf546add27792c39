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

#ifndef ARCHLOOP_SYSVERIFY_HPP
#define ARCHLOOP_SYSVERIFY_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "archloop/isa.hpp"
#include "json.hpp"

// System-level verification: golden debug traces, trace files, and
// cycle-by-cycle comparison against the DUT's debug outputs.
namespace archloop::sysverify {

/// One cycle of the top-level debug ports, sampled at the end of the cycle
/// after write-back.
struct DebugRecord {
  std::uint64_t cycle = 0;
  std::uint32_t debug_pc_out = 0;
  std::uint32_t debug_instruction_out = 0;
  std::uint32_t debug_alu_result = 0;
  std::uint32_t debug_reg_write_data = 0;

  bool operator==(const DebugRecord&) const = default;
};

using DebugTrace = std::vector<DebugRecord>;

/// Signals in comparison order.
inline constexpr std::array<std::string_view, 4> kSignals = {
    "debug_pc_out", "debug_instruction_out", "debug_alu_result",
    "debug_reg_write_data"};

inline constexpr std::string_view kTraceLength = "trace_length";
inline constexpr std::string_view kTraceHeader =
    "cycle,debug_pc_out,debug_instruction_out,debug_alu_result,"
    "debug_reg_write_data";

std::uint32_t signal_value(const DebugRecord& r, std::string_view signal);

struct Divergence {
  std::uint64_t cycle = 0;
  std::string signal;
  std::uint64_t expected = 0;
  std::uint64_t actual = 0;

  bool operator==(const Divergence&) const = default;
};

class TraceFormatError : public Error {
 public:
  TraceFormatError(std::size_t line, const std::string& message)
      : Error("TraceFormatError",
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct GoldenOptions {
  /// Repeat the frozen post-HALT values until `cycles` records exist.
  bool pad_after_halt = false;
};

/// Projects the golden run onto the debug signals. Non-writing instructions
/// report debug_reg_write_data = 0.
DebugTrace golden_trace(const isa::MemImage& imem, std::uint64_t cycles,
                        const isa::IsaConfig& cfg = {},
                        GoldenOptions options = {});

/// Element-wise over min(len) cycles in (cycle, signal) order; a length
/// difference appends one `trace_length` divergence.
std::vector<Divergence> compare_traces(const DebugTrace& expected,
                                       const DebugTrace& actual);

/// Parses the CSV trace format. Values must fit the configured widths and
/// cycles must count up from 0.
DebugTrace load_trace(std::string_view text, const isa::IsaConfig& cfg = {});
std::string emit_trace(const DebugTrace& trace, const isa::IsaConfig& cfg = {});

struct ReportContext {
  const DebugTrace* expected = nullptr;
  const DebugTrace* actual = nullptr;
  const isa::MemImage* program = nullptr;
  isa::IsaConfig cfg;
};

struct Report {
  std::string verdict;  // "PASS", "FAIL", "FAIL (trace length)"
  std::string text;
  nlohmann::json json;
};

Report report(const std::vector<Divergence>& divergences,
              const ReportContext& context);

nlohmann::json to_json(const Divergence& d);

}  // namespace archloop::sysverify

#endif  // ARCHLOOP_SYSVERIFY_HPP
