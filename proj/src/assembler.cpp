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

#include "archloop/assembler.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <vector>

namespace archloop::isa {

namespace {

struct Statement {
  std::size_t line = 0;
  std::string mnemonic;
  std::vector<std::string> operands;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.')) {
    return false;
  }
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.';
  });
}

std::int64_t parse_number(std::string_view text, std::size_t line) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw AsmError(line, fmt::format("bad number '{}'", text));
  }
  return negative ? -value : value;
}

}  // namespace

MemImage assemble(std::string_view source, const IsaConfig& cfg) {
  std::vector<Statement> statements;
  std::map<std::string, std::size_t> labels;  // label -> instruction index

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    std::string_view raw = source.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    for (std::string_view marker : {"//", ";"}) {
      if (auto c = raw.find(marker); c != std::string_view::npos) {
        raw = raw.substr(0, c);
      }
    }
    std::string text = trim(raw);
    // Leading labels.
    while (true) {
      auto colon = text.find(':');
      if (colon == std::string::npos) break;
      std::string label = trim(std::string_view(text).substr(0, colon));
      if (!is_identifier(label)) {
        throw AsmError(line_no, fmt::format("bad label '{}'", label));
      }
      if (!labels.emplace(label, statements.size()).second) {
        throw AsmError(line_no, fmt::format("duplicate label '{}'", label));
      }
      text = trim(std::string_view(text).substr(colon + 1));
    }
    if (text.empty()) continue;

    Statement st;
    st.line = line_no;
    auto space = text.find_first_of(" \t");
    st.mnemonic = upper(text.substr(0, space));
    if (space != std::string::npos) {
      std::string rest = text.substr(space + 1);
      rest.erase(std::remove_if(rest.begin(), rest.end(),
                                [](char c) { return c == '[' || c == ']'; }),
                 rest.end());
      std::size_t start = 0;
      while (start <= rest.size()) {
        auto comma = rest.find(',', start);
        if (comma == std::string::npos) comma = rest.size();
        std::string op = trim(std::string_view(rest).substr(start, comma - start));
        if (op.empty()) throw AsmError(line_no, "empty operand");
        st.operands.push_back(op);
        start = comma + 1;
      }
    }
    statements.push_back(std::move(st));
    if (end == source.size()) break;
  }

  auto expect_operands = [](const Statement& st, std::size_t n) {
    if (st.operands.size() != n) {
      throw AsmError(st.line, fmt::format("{} takes {} operand(s), got {}",
                                          st.mnemonic, n, st.operands.size()));
    }
  };
  auto reg = [&](const Statement& st, const std::string& op) -> unsigned {
    if (op.size() < 2 || (op[0] != 'r' && op[0] != 'R')) {
      throw AsmError(st.line, fmt::format("expected register, got '{}'", op));
    }
    std::int64_t n = parse_number(std::string_view(op).substr(1), st.line);
    if (n < 0 || static_cast<std::size_t>(n) >= cfg.register_count()) {
      throw AsmError(st.line, fmt::format("register '{}' out of range", op));
    }
    return static_cast<unsigned>(n);
  };
  auto signed_field = [&](const Statement& st, std::int64_t v) -> std::uint32_t {
    const std::int64_t lo = -(std::int64_t{1} << (cfg.immediate_width - 1));
    const std::int64_t hi = (std::int64_t{1} << (cfg.immediate_width - 1)) - 1;
    if (v < lo || v > hi) {
      throw AsmError(st.line,
                     fmt::format("immediate {} overflows {}-bit field [{}, {}]",
                                 v, cfg.immediate_width, lo, hi));
    }
    return static_cast<std::uint32_t>(v) & IsaConfig::mask(cfg.immediate_width);
  };
  auto immediate = [&](const Statement& st, const std::string& op) -> std::int64_t {
    if (op.empty() || op[0] != '#') {
      throw AsmError(st.line, fmt::format("expected #immediate, got '{}'", op));
    }
    return parse_number(std::string_view(op).substr(1), st.line);
  };
  auto label_index = [&](const Statement& st, const std::string& op) -> std::size_t {
    auto it = labels.find(op);
    if (it == labels.end()) {
      throw AsmError(st.line, fmt::format("undefined label '{}'", op));
    }
    return it->second;
  };

  MemImage img;
  for (std::size_t index = 0; index < statements.size(); ++index) {
    const Statement& st = statements[index];
    auto op = op_from_mnemonic(st.mnemonic);
    if (!op) {
      throw AsmError(st.line, fmt::format("unknown mnemonic '{}'", st.mnemonic));
    }
    Instruction in;
    switch (format_of(*op)) {
      case Format::kR:
        expect_operands(st, 3);
        in = Instruction::r(*op, reg(st, st.operands[0]), reg(st, st.operands[1]),
                            reg(st, st.operands[2]));
        break;
      case Format::kI:
        expect_operands(st, 3);
        in = Instruction::i(*op, reg(st, st.operands[0]), reg(st, st.operands[1]),
                            signed_field(st, immediate(st, st.operands[2])));
        break;
      case Format::kCB: {
        expect_operands(st, 2);
        const std::string& target = st.operands[1];
        std::int64_t offset =
            target[0] == '#'
                ? immediate(st, target)
                : static_cast<std::int64_t>(label_index(st, target)) -
                      static_cast<std::int64_t>(index);
        in = Instruction::cbz(reg(st, st.operands[0]), signed_field(st, offset));
        break;
      }
      case Format::kB: {
        expect_operands(st, 1);
        const std::string& target = st.operands[0];
        std::int64_t addr =
            target[0] == '#'
                ? immediate(st, target)
                : static_cast<std::int64_t>(img.origin) +
                      static_cast<std::int64_t>(label_index(st, target) *
                                                cfg.pc_increment);
        if (addr < 0 || addr > IsaConfig::mask(cfg.jump_addr_width)) {
          throw AsmError(st.line, fmt::format("branch target {} out of range", addr));
        }
        in = Instruction::b(static_cast<std::uint32_t>(addr));
        break;
      }
      case Format::kZ:
        expect_operands(st, 0);
        in = Instruction{*op};
        break;
    }
    try {
      img.words.push_back(encode(in, cfg));
    } catch (const RangeError& e) {
      throw AsmError(st.line, e.what());
    }
  }
  return img;
}

}  // namespace archloop::isa
