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

#ifndef ARCHLOOP_HEX_HPP
#define ARCHLOOP_HEX_HPP

#include <string>
#include <string_view>

#include "archloop/isa.hpp"

namespace archloop::isa {

class HexError : public IsaError {
 public:
  HexError(std::size_t line, const std::string& message)
      : IsaError("HexError", "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses a $readmemh-style image: one word per line, exactly
/// word_hex_digits() hex digits, `//` comments and blank lines skipped.
MemImage load_hex(std::string_view text, const IsaConfig& cfg = {});

/// Uppercase, zero-padded, newline-terminated.
std::string emit_hex(const MemImage& img, const IsaConfig& cfg = {});

}  // namespace archloop::isa

#endif  // ARCHLOOP_HEX_HPP
