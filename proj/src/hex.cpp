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

#include "archloop/hex.hpp"

#include <fmt/format.h>

#include <cctype>

namespace archloop::isa {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

MemImage load_hex(std::string_view text, const IsaConfig& cfg) {
  MemImage img;
  const unsigned digits = cfg.word_hex_digits();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto c = line.find("//"); c != std::string_view::npos) {
      line = line.substr(0, c);
    }
    line = trim(line);
    if (line.empty()) continue;
    std::uint32_t word = 0;
    for (char ch : line) {
      if (!std::isxdigit(static_cast<unsigned char>(ch))) {
        throw HexError(line_no, fmt::format("non-hex character '{}'", ch));
      }
    }
    if (line.size() != digits) {
      throw HexError(line_no, fmt::format("expected {} hex digits, got {}",
                                          digits, line.size()));
    }
    for (char ch : line) {
      word = (word << 4) |
             static_cast<std::uint32_t>(
                 std::isdigit(static_cast<unsigned char>(ch))
                     ? ch - '0'
                     : std::toupper(static_cast<unsigned char>(ch)) - 'A' + 10);
    }
    if (word > cfg.word_mask()) {
      throw HexError(line_no, "word exceeds instruction width");
    }
    img.words.push_back(word);
  }
  return img;
}

std::string emit_hex(const MemImage& img, const IsaConfig& cfg) {
  std::string out;
  const unsigned digits = cfg.word_hex_digits();
  for (std::uint32_t w : img.words) {
    out += fmt::format("{:0{}X}\n", w, digits);
  }
  return out;
}

}  // namespace archloop::isa
