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

#include "archloop/textdiff.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#include <fmt/format.h>

namespace archloop {

namespace {

struct Line {
  std::string_view text;
  bool newline = true;
  bool operator==(const Line&) const = default;
};

std::vector<Line> split_lines(std::string_view s) {
  std::vector<Line> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back({s.substr(start), false});
      break;
    }
    out.push_back({s.substr(start, nl - start), true});
    start = nl + 1;
  }
  return out;
}

struct Op {
  char kind;  // ' ', '-', '+'
  std::size_t a;  // index into before (for ' ' and '-')
  std::size_t b;  // index into after (for ' ' and '+')
};

// Above this many DP cells the middle section is emitted as a full rewrite.
constexpr std::size_t kMaxCells = 16u * 1024u * 1024u;

std::vector<Op> edit_script(const std::vector<Line>& a, const std::vector<Line>& b) {
  std::size_t pre = 0;
  while (pre < a.size() && pre < b.size() && a[pre] == b[pre]) ++pre;
  std::size_t suf = 0;
  while (suf < a.size() - pre && suf < b.size() - pre &&
         a[a.size() - 1 - suf] == b[b.size() - 1 - suf]) {
    ++suf;
  }
  std::size_t n = a.size() - pre - suf;
  std::size_t m = b.size() - pre - suf;

  std::vector<Op> ops;
  for (std::size_t i = 0; i < pre; ++i) ops.push_back({' ', i, i});

  if (n * m <= kMaxCells && n > 0 && m > 0) {
    // lcs[i][j] = LCS length of a[pre+i..] and b[pre+j..].
    std::vector<std::uint32_t> lcs((n + 1) * (m + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
      return lcs[i * (m + 1) + j];
    };
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = m; j-- > 0;) {
        at(i, j) = a[pre + i] == b[pre + j] ? at(i + 1, j + 1) + 1
                                            : std::max(at(i + 1, j), at(i, j + 1));
      }
    }
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
      if (i < n && j < m && a[pre + i] == b[pre + j]) {
        ops.push_back({' ', pre + i, pre + j});
        ++i;
        ++j;
      } else if (j < m && (i == n || at(i, j + 1) > at(i + 1, j))) {
        ops.push_back({'+', pre + i, pre + j});
        ++j;
      } else {
        ops.push_back({'-', pre + i, pre + j});
        ++i;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) ops.push_back({'-', pre + i, pre});
    for (std::size_t j = 0; j < m; ++j) ops.push_back({'+', pre + n, pre + j});
  }

  for (std::size_t k = 0; k < suf; ++k) {
    ops.push_back({' ', a.size() - suf + k, b.size() - suf + k});
  }
  return ops;
}

std::string range(std::size_t start, std::size_t count) {
  // GNU style: a zero-length range names the line before it.
  if (count == 0) return fmt::format("{},0", start);
  if (count == 1) return fmt::format("{}", start + 1);
  return fmt::format("{},{}", start + 1, count);
}

void emit_line(std::string& out, char kind, const Line& l) {
  out += kind;
  out.append(l.text);
  out += '\n';
  if (!l.newline) out += "\\ No newline at end of file\n";
}

}  // namespace

std::string unified_diff(std::string_view before, std::string_view after,
                         std::string_view before_label, std::string_view after_label,
                         unsigned context) {
  if (before == after) return {};
  std::vector<Line> a = split_lines(before);
  std::vector<Line> b = split_lines(after);
  std::vector<Op> ops = edit_script(a, b);

  std::string out = fmt::format("--- {}\n+++ {}\n", before_label, after_label);
  std::size_t k = 0;
  while (k < ops.size()) {
    while (k < ops.size() && ops[k].kind == ' ') ++k;
    if (k == ops.size()) break;
    std::size_t first = k >= context ? k - context : 0;
    // Extend while the next change is within 2*context unchanged lines.
    std::size_t last = k;
    for (std::size_t p = k; p < ops.size(); ++p) {
      if (ops[p].kind != ' ') {
        last = p;
      } else if (p - last > 2 * context) {
        break;
      }
    }
    std::size_t end = std::min(ops.size(), last + context + 1);

    std::size_t a_start = ops[first].a, a_count = 0, b_start = ops[first].b, b_count = 0;
    for (std::size_t p = first; p < end; ++p) {
      if (ops[p].kind != '+') ++a_count;
      if (ops[p].kind != '-') ++b_count;
    }
    out += fmt::format("@@ -{} +{} @@\n", range(a_start, a_count), range(b_start, b_count));
    for (std::size_t p = first; p < end; ++p) {
      const Op& op = ops[p];
      emit_line(out, op.kind, op.kind == '+' ? b[op.b] : a[op.a]);
    }
    k = end;
  }
  return out;
}

}  // namespace archloop
