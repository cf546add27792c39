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

#ifndef ARCHLOOP_ISA_HPP
#define ARCHLOOP_ISA_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "archloop/errors.hpp"
#include "json.hpp"

// Golden model of the 16-bit LEGv8-style single-cycle machine.
//
// Encoding (default widths; fields are packed from the MSB down and
// immediates from the LSB up for other widths):
//
//   R  ADD SUB AND ORR       opcode[15:12] rd[11:9] rn[8:6] rm[5:3] 000
//   I  ADDI SUBI LDUR STUR   opcode[15:12] rd[11:9] rn[8:6] imm6[5:0]
//   CB CBZ                   opcode[15:12] rt[11:9] 000     imm6[5:0]
//   B  B                     opcode[15:12] addr12[11:0]
//   Z  NOP HALT              opcode[15:12] 0...
//
// Opcodes: 0 NOP, 1 ADD, 2 SUB, 3 AND, 4 ORR, 5 ADDI, 6 SUBI, 7 LDUR,
// 8 STUR, 9 CBZ, A B, F HALT. B..E are illegal. Reserved bits must be zero.
namespace archloop::isa {

struct IsaConfig {
  unsigned data_width = 8;
  unsigned address_width = 8;
  unsigned instruction_width = 16;
  unsigned reg_addr_width = 3;
  unsigned opcode_width = 4;
  unsigned immediate_width = 6;
  unsigned jump_addr_width = 12;
  unsigned pc_increment = 2;

  /// Reads the *_WIDTH and PC_INCREMENT_VAL entries of a blueprint parameter
  /// table; missing entries keep their defaults.
  static IsaConfig from_parameters(const std::map<std::string, std::int64_t>& p);

  /// Throws ConfigError when the field layout does not fit the word.
  void validate() const;

  std::uint32_t data_mask() const { return mask(data_width); }
  std::uint32_t address_mask() const { return mask(address_width); }
  std::uint32_t word_mask() const { return mask(instruction_width); }
  std::size_t register_count() const { return std::size_t{1} << reg_addr_width; }
  std::size_t memory_size() const { return std::size_t{1} << address_width; }
  unsigned word_hex_digits() const { return (instruction_width + 3) / 4; }

  static std::uint32_t mask(unsigned bits) {
    return bits >= 32 ? 0xFFFFFFFFu : ((1u << bits) - 1u);
  }

  bool operator==(const IsaConfig&) const = default;
};

enum class Op : std::uint8_t {
  kNop = 0x0,
  kAdd = 0x1,
  kSub = 0x2,
  kAnd = 0x3,
  kOrr = 0x4,
  kAddi = 0x5,
  kSubi = 0x6,
  kLdur = 0x7,
  kStur = 0x8,
  kCbz = 0x9,
  kB = 0xA,
  kHalt = 0xF,
};

enum class Format { kR, kI, kCB, kB, kZ };

inline constexpr std::array<Op, 12> kAllOps = {
    Op::kNop,  Op::kAdd,  Op::kSub,  Op::kAnd, Op::kOrr, Op::kAddi,
    Op::kSubi, Op::kLdur, Op::kStur, Op::kCbz, Op::kB,   Op::kHalt};

std::string_view mnemonic(Op op);
std::optional<Op> op_from_mnemonic(std::string_view name);
Format format_of(Op op);

/// A decoded instruction. `imm` holds the raw field bits: the 6-bit
/// immediate (sign-extended on use) for I/CB formats, the jump target for B.
/// Fields the format does not use must be zero.
struct Instruction {
  Op op = Op::kNop;
  std::uint8_t rd = 0;
  std::uint8_t rn = 0;
  std::uint8_t rm = 0;
  std::uint32_t imm = 0;

  static Instruction r(Op op, unsigned rd, unsigned rn, unsigned rm);
  static Instruction i(Op op, unsigned rd, unsigned rn, std::uint32_t imm);
  static Instruction cbz(unsigned rt, std::uint32_t imm);
  static Instruction b(std::uint32_t target);
  static Instruction nop() { return {}; }
  static Instruction halt() { return {Op::kHalt}; }

  bool operator==(const Instruction&) const = default;
};

/// Human-readable assembly form, e.g. "ADDI r1, r0, #5".
std::string disassemble(const Instruction& instr, const IsaConfig& cfg = {});

std::int32_t sign_extend(std::uint32_t value, unsigned bits);

struct ArchState {
  std::uint32_t pc = 0;
  std::vector<std::uint32_t> regs;
  std::vector<std::uint32_t> dmem;
  bool halted = false;

  bool operator==(const ArchState&) const = default;
};

struct MemImage {
  std::vector<std::uint32_t> words;
  std::uint32_t origin = 0;

  bool operator==(const MemImage&) const = default;
};

/// What one cycle did. `regs` is the register file after the cycle.
struct TraceRecord {
  std::uint64_t cycle = 0;
  std::uint32_t pc = 0;
  std::uint32_t word = 0;
  Instruction instr;
  std::uint32_t alu_result = 0;
  std::uint32_t reg_write_data = 0;
  std::optional<std::uint8_t> reg_written;
  std::uint32_t next_pc = 0;
  std::vector<std::uint32_t> regs;

  bool operator==(const TraceRecord&) const = default;
};

class IsaError : public Error {
 public:
  IsaError(std::string code, const std::string& message)
      : Error(std::move(code), message) {}

  std::optional<std::uint64_t> cycle() const noexcept { return cycle_; }
  void set_cycle(std::uint64_t c) noexcept { cycle_ = c; }

 private:
  std::optional<std::uint64_t> cycle_;
};

class RangeError : public IsaError {
 public:
  explicit RangeError(const std::string& m) : IsaError("RangeError", m) {}
};

class DecodeError : public IsaError {
 public:
  DecodeError(std::uint32_t word, const std::string& m)
      : IsaError("DecodeError", m), word_(word) {}
  std::uint32_t word() const noexcept { return word_; }

 private:
  std::uint32_t word_;
};

class FetchError : public IsaError {
 public:
  explicit FetchError(std::uint32_t pc)
      : IsaError("FetchError",
                 "fetch outside instruction image at pc " + std::to_string(pc)),
        pc_(pc) {}
  std::uint32_t pc() const noexcept { return pc_; }

 private:
  std::uint32_t pc_;
};

std::uint32_t encode(const Instruction& instr, const IsaConfig& cfg = {});
Instruction decode(std::uint32_t word, const IsaConfig& cfg = {});

ArchState reset(const IsaConfig& cfg = {});

struct StepResult {
  ArchState state;
  TraceRecord record;
};

/// Executes one instruction. The input state is never modified.
StepResult step(const ArchState& state, const MemImage& imem,
                const IsaConfig& cfg = {});

struct RunResult {
  ArchState state;
  std::vector<TraceRecord> trace;
};

/// Steps from reset until HALT (inclusive) or `max_cycles`. Step errors are
/// rethrown with the failing cycle index attached.
RunResult run(const MemImage& imem, std::uint64_t max_cycles,
              const IsaConfig& cfg = {});

/// Machine-readable encoding table shared with the generation prompts.
nlohmann::json isa_table_json(const IsaConfig& cfg = {});

}  // namespace archloop::isa

#endif  // ARCHLOOP_ISA_HPP
