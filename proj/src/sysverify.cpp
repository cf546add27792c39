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

#include "archloop/sysverify.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>

namespace archloop::sysverify {

using nlohmann::json;

std::uint32_t signal_value(const DebugRecord& r, std::string_view signal) {
  if (signal == kSignals[0]) return r.debug_pc_out;
  if (signal == kSignals[1]) return r.debug_instruction_out;
  if (signal == kSignals[2]) return r.debug_alu_result;
  if (signal == kSignals[3]) return r.debug_reg_write_data;
  throw std::invalid_argument("unknown signal " + std::string(signal));
}

DebugTrace golden_trace(const isa::MemImage& imem, std::uint64_t cycles,
                        const isa::IsaConfig& cfg, GoldenOptions options) {
  DebugTrace out;
  if (cycles == 0) return out;
  isa::RunResult run = isa::run(imem, cycles, cfg);
  out.reserve(run.trace.size());
  for (const auto& rec : run.trace) {
    DebugRecord d;
    d.cycle = rec.cycle;
    d.debug_pc_out = rec.pc;
    d.debug_instruction_out = rec.word;
    d.debug_alu_result = rec.alu_result;
    d.debug_reg_write_data = rec.reg_written ? rec.reg_write_data : 0;
    out.push_back(d);
  }
  if (options.pad_after_halt && run.state.halted && !out.empty()) {
    DebugRecord frozen = out.back();
    while (out.size() < cycles) {
      frozen.cycle = out.size();
      out.push_back(frozen);
    }
  }
  return out;
}

std::vector<Divergence> compare_traces(const DebugTrace& expected,
                                       const DebugTrace& actual) {
  std::vector<Divergence> out;
  const std::size_t n = std::min(expected.size(), actual.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::string_view sig : kSignals) {
      std::uint32_t e = signal_value(expected[i], sig);
      std::uint32_t a = signal_value(actual[i], sig);
      if (e != a) out.push_back({expected[i].cycle, std::string(sig), e, a});
    }
  }
  if (expected.size() != actual.size()) {
    out.push_back({n, std::string(kTraceLength), expected.size(), actual.size()});
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_field(std::string_view s, int base, std::size_t line,
                          std::string_view name) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw TraceFormatError(line, fmt::format("bad {} value '{}'", name, s));
  }
  return v;
}

}  // namespace

DebugTrace load_trace(std::string_view text, const isa::IsaConfig& cfg) {
  DebugTrace out;
  const std::array<std::uint32_t, 4> limits = {
      cfg.address_mask(), cfg.word_mask(), cfg.data_mask(), cfg.data_mask()};
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTraceHeader) {
        throw TraceFormatError(line_no, "missing trace header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos
                                              ? std::string_view::npos
                                              : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 5) {
      throw TraceFormatError(line_no, fmt::format("expected 5 fields, got {}",
                                                  fields.size()));
    }
    DebugRecord r;
    r.cycle = parse_field(fields[0], 10, line_no, "cycle");
    if (r.cycle != out.size()) {
      throw TraceFormatError(line_no, fmt::format("expected cycle {}, got {}",
                                                  out.size(), r.cycle));
    }
    std::array<std::uint32_t*, 4> slots = {
        &r.debug_pc_out, &r.debug_instruction_out, &r.debug_alu_result,
        &r.debug_reg_write_data};
    for (std::size_t k = 0; k < 4; ++k) {
      std::uint64_t v = parse_field(fields[k + 1], 16, line_no, kSignals[k]);
      if (v > limits[k]) {
        throw TraceFormatError(line_no, fmt::format("{} value {:#x} exceeds width",
                                                    kSignals[k], v));
      }
      *slots[k] = static_cast<std::uint32_t>(v);
    }
    out.push_back(r);
  }
  if (!header_seen) throw TraceFormatError(line_no + 1, "missing trace header");
  return out;
}

std::string emit_trace(const DebugTrace& trace, const isa::IsaConfig& cfg) {
  const unsigned pc_digits = (cfg.address_width + 3) / 4;
  const unsigned word_digits = cfg.word_hex_digits();
  const unsigned data_digits = (cfg.data_width + 3) / 4;
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : trace) {
    out += fmt::format("{},{:0{}X},{:0{}X},{:0{}X},{:0{}X}\n", r.cycle,
                       r.debug_pc_out, pc_digits, r.debug_instruction_out,
                       word_digits, r.debug_alu_result, data_digits,
                       r.debug_reg_write_data, data_digits);
  }
  return out;
}

json to_json(const Divergence& d) {
  return json{{"cycle", d.cycle},
              {"signal", d.signal},
              {"expected", d.expected},
              {"actual", d.actual}};
}

Report report(const std::vector<Divergence>& divergences,
              const ReportContext& ctx) {
  Report r;
  const bool only_length =
      !divergences.empty() &&
      std::all_of(divergences.begin(), divergences.end(),
                  [](const Divergence& d) { return d.signal == kTraceLength; });
  r.verdict = divergences.empty() ? "PASS"
              : only_length       ? "FAIL (trace length)"
                                  : "FAIL";
  r.json["schema_version"] = 1;
  r.json["verdict"] = r.verdict;
  r.json["divergence_count"] = divergences.size();
  r.json["divergences"] = json::array();
  for (const auto& d : divergences) r.json["divergences"].push_back(to_json(d));
  if (ctx.expected) r.json["expected_cycles"] = ctx.expected->size();
  if (ctx.actual) r.json["actual_cycles"] = ctx.actual->size();

  std::string text = fmt::format("system verification: {}\n", r.verdict);
  if (!divergences.empty()) {
    const Divergence& first = divergences.front();
    json jf = to_json(first);
    std::string where;
    // Decode the instruction the golden model executed at that cycle.
    std::optional<std::uint32_t> word;
    if (ctx.expected && first.cycle < ctx.expected->size()) {
      word = (*ctx.expected)[first.cycle].debug_instruction_out;
    }
    if (word) {
      std::string mnem;
      try {
        mnem = isa::disassemble(isa::decode(*word, ctx.cfg), ctx.cfg);
      } catch (const isa::DecodeError&) {
        mnem = "<illegal>";
      }
      jf["instruction_word"] = *word;
      jf["instruction"] = mnem;
      where = fmt::format(" while executing {} ({:#0{}x})", mnem, *word,
                          ctx.cfg.word_hex_digits() + 2);
    }
    r.json["first_divergence"] = jf;
    if (first.signal == kTraceLength) {
      text += fmt::format("  trace length differs: expected {} cycles, got {}\n",
                          first.expected, first.actual);
    } else {
      text += fmt::format(
          "  first divergence at cycle {}: {} expected {:#x} actual {:#x}{}\n",
          first.cycle, first.signal, first.expected, first.actual, where);
    }
    if (divergences.size() > 1) {
      text += fmt::format("  {} further divergence(s)\n", divergences.size() - 1);
    }
  } else {
    r.json["first_divergence"] = nullptr;
  }
  r.text = std::move(text);
  return r;
}

}  // namespace archloop::sysverify
