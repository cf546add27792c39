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

#ifndef ARCHLOOP_ASSEMBLER_HPP
#define ARCHLOOP_ASSEMBLER_HPP

#include <string>
#include <string_view>

#include "archloop/isa.hpp"

namespace archloop::isa {

class AsmError : public IsaError {
 public:
  AsmError(std::size_t line, const std::string& message)
      : IsaError("AsmError", "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Syntax, one statement per line:
//
//   loop:                     label (may share a line with an instruction)
//   ADD  r1, r2, r3
//   ADDI r1, r0, #5           immediates are decimal or 0x-prefixed hex
//   LDUR r1, [r2, #3]         brackets optional: LDUR r1, r2, #3
//   CBZ  r1, loop             label or #offset (in instructions)
//   B    loop                 label or #byte-address
//   HALT                      ; and // start comments
//
// Mnemonics are case-insensitive.
MemImage assemble(std::string_view source, const IsaConfig& cfg = {});

}  // namespace archloop::isa

#endif  // ARCHLOOP_ASSEMBLER_HPP
