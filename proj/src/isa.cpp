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

#include "archloop/isa.hpp"

#include <fmt/format.h>

namespace archloop::isa {

namespace {

struct Layout {
  unsigned op_lo;  // opcode occupies [iw-1 : op_lo]
  unsigned rd_lo;
  unsigned rn_lo;
  unsigned rm_lo;
};

Layout layout(const IsaConfig& cfg) {
  Layout l{};
  l.op_lo = cfg.instruction_width - cfg.opcode_width;
  l.rd_lo = l.op_lo - cfg.reg_addr_width;
  l.rn_lo = l.rd_lo - cfg.reg_addr_width;
  l.rm_lo = l.rn_lo - cfg.reg_addr_width;
  return l;
}

void check_field(const char* name, std::uint32_t value, unsigned bits) {
  if (value > IsaConfig::mask(bits)) {
    throw RangeError(fmt::format("{} value {} does not fit in {} bits", name,
                                 value, bits));
  }
}

void check_zero(const char* name, std::uint32_t value, Op op) {
  if (value != 0) {
    throw RangeError(fmt::format("{} field must be zero for {}", name,
                                 mnemonic(op)));
  }
}

}  // namespace

IsaConfig IsaConfig::from_parameters(
    const std::map<std::string, std::int64_t>& p) {
  IsaConfig cfg;
  auto read = [&](const char* key, unsigned& field) {
    if (auto it = p.find(key); it != p.end()) {
      field = static_cast<unsigned>(it->second);
    }
  };
  read("DATA_WIDTH", cfg.data_width);
  read("ADDRESS_WIDTH", cfg.address_width);
  read("INSTRUCTION_WIDTH", cfg.instruction_width);
  read("REG_ADDR_WIDTH", cfg.reg_addr_width);
  read("OPCODE_WIDTH", cfg.opcode_width);
  read("IMMEDIATE_WIDTH", cfg.immediate_width);
  read("JUMP_ADDR_WIDTH", cfg.jump_addr_width);
  read("PC_INCREMENT_VAL", cfg.pc_increment);
  return cfg;
}

void IsaConfig::validate() const {
  auto positive = [](const char* name, unsigned v, unsigned max) {
    if (v == 0 || v > max) {
      throw ConfigError(fmt::format("{} must be in [1, {}], got {}", name, max, v));
    }
  };
  positive("data_width", data_width, 32);
  positive("address_width", address_width, 24);
  positive("instruction_width", instruction_width, 32);
  positive("reg_addr_width", reg_addr_width, 8);
  positive("opcode_width", opcode_width, 8);
  positive("immediate_width", immediate_width, 31);
  positive("jump_addr_width", jump_addr_width, 31);
  positive("pc_increment", pc_increment, 1024);
  if (opcode_width < 4) {
    throw ConfigError("opcode_width must be >= 4 to hold the opcode table");
  }
  if (opcode_width + 3 * reg_addr_width > instruction_width) {
    throw ConfigError("R-format fields exceed instruction_width");
  }
  if (opcode_width + 2 * reg_addr_width + immediate_width > instruction_width) {
    throw ConfigError("I-format fields exceed instruction_width");
  }
  if (opcode_width + jump_addr_width > instruction_width) {
    throw ConfigError("B-format fields exceed instruction_width");
  }
}

std::string_view mnemonic(Op op) {
  switch (op) {
    case Op::kNop: return "NOP";
    case Op::kAdd: return "ADD";
    case Op::kSub: return "SUB";
    case Op::kAnd: return "AND";
    case Op::kOrr: return "ORR";
    case Op::kAddi: return "ADDI";
    case Op::kSubi: return "SUBI";
    case Op::kLdur: return "LDUR";
    case Op::kStur: return "STUR";
    case Op::kCbz: return "CBZ";
    case Op::kB: return "B";
    case Op::kHalt: return "HALT";
  }
  return "?";
}

std::optional<Op> op_from_mnemonic(std::string_view name) {
  for (Op op : kAllOps) {
    if (mnemonic(op) == name) return op;
  }
  return std::nullopt;
}

Format format_of(Op op) {
  switch (op) {
    case Op::kAdd:
    case Op::kSub:
    case Op::kAnd:
    case Op::kOrr:
      return Format::kR;
    case Op::kAddi:
    case Op::kSubi:
    case Op::kLdur:
    case Op::kStur:
      return Format::kI;
    case Op::kCbz:
      return Format::kCB;
    case Op::kB:
      return Format::kB;
    case Op::kNop:
    case Op::kHalt:
      return Format::kZ;
  }
  return Format::kZ;
}

Instruction Instruction::r(Op op, unsigned rd, unsigned rn, unsigned rm) {
  return {op, static_cast<std::uint8_t>(rd), static_cast<std::uint8_t>(rn),
          static_cast<std::uint8_t>(rm), 0};
}

Instruction Instruction::i(Op op, unsigned rd, unsigned rn, std::uint32_t imm) {
  return {op, static_cast<std::uint8_t>(rd), static_cast<std::uint8_t>(rn), 0,
          imm};
}

Instruction Instruction::cbz(unsigned rt, std::uint32_t imm) {
  return {Op::kCbz, static_cast<std::uint8_t>(rt), 0, 0, imm};
}

Instruction Instruction::b(std::uint32_t target) {
  return {Op::kB, 0, 0, 0, target};
}

std::int32_t sign_extend(std::uint32_t value, unsigned bits) {
  if (bits == 0 || bits >= 32) return static_cast<std::int32_t>(value);
  std::uint32_t m = IsaConfig::mask(bits);
  value &= m;
  if (value & (1u << (bits - 1))) {
    return static_cast<std::int32_t>(value) - static_cast<std::int32_t>(m) - 1;
  }
  return static_cast<std::int32_t>(value);
}

std::string disassemble(const Instruction& in, const IsaConfig& cfg) {
  switch (format_of(in.op)) {
    case Format::kR:
      return fmt::format("{} r{}, r{}, r{}", mnemonic(in.op), in.rd, in.rn,
                         in.rm);
    case Format::kI:
      return fmt::format("{} r{}, r{}, #{}", mnemonic(in.op), in.rd, in.rn,
                         sign_extend(in.imm, cfg.immediate_width));
    case Format::kCB:
      return fmt::format("CBZ r{}, #{}", in.rd,
                         sign_extend(in.imm, cfg.immediate_width));
    case Format::kB:
      return fmt::format("B #{}", in.imm);
    case Format::kZ:
      return std::string(mnemonic(in.op));
  }
  return "?";
}

std::uint32_t encode(const Instruction& in, const IsaConfig& cfg) {
  const Layout l = layout(cfg);
  std::uint32_t word = static_cast<std::uint32_t>(in.op) << l.op_lo;
  switch (format_of(in.op)) {
    case Format::kR:
      check_field("rd", in.rd, cfg.reg_addr_width);
      check_field("rn", in.rn, cfg.reg_addr_width);
      check_field("rm", in.rm, cfg.reg_addr_width);
      check_zero("imm", in.imm, in.op);
      word |= std::uint32_t{in.rd} << l.rd_lo;
      word |= std::uint32_t{in.rn} << l.rn_lo;
      word |= std::uint32_t{in.rm} << l.rm_lo;
      break;
    case Format::kI:
      check_field("rd", in.rd, cfg.reg_addr_width);
      check_field("rn", in.rn, cfg.reg_addr_width);
      check_zero("rm", in.rm, in.op);
      check_field("imm", in.imm, cfg.immediate_width);
      word |= std::uint32_t{in.rd} << l.rd_lo;
      word |= std::uint32_t{in.rn} << l.rn_lo;
      word |= in.imm;
      break;
    case Format::kCB:
      check_field("rt", in.rd, cfg.reg_addr_width);
      check_zero("rn", in.rn, in.op);
      check_zero("rm", in.rm, in.op);
      check_field("imm", in.imm, cfg.immediate_width);
      word |= std::uint32_t{in.rd} << l.rd_lo;
      word |= in.imm;
      break;
    case Format::kB:
      check_zero("rd", in.rd, in.op);
      check_zero("rn", in.rn, in.op);
      check_zero("rm", in.rm, in.op);
      check_field("target", in.imm, cfg.jump_addr_width);
      word |= in.imm;
      break;
    case Format::kZ:
      check_zero("rd", in.rd, in.op);
      check_zero("rn", in.rn, in.op);
      check_zero("rm", in.rm, in.op);
      check_zero("imm", in.imm, in.op);
      break;
  }
  return word;
}

Instruction decode(std::uint32_t word, const IsaConfig& cfg) {
  if (word > cfg.word_mask()) {
    throw DecodeError(word, fmt::format("word {:#x} wider than {} bits", word,
                                        cfg.instruction_width));
  }
  const Layout l = layout(cfg);
  const std::uint32_t opcode = word >> l.op_lo;
  const std::uint32_t rmask = IsaConfig::mask(cfg.reg_addr_width);
  const std::uint32_t rd = (word >> l.rd_lo) & rmask;
  const std::uint32_t rn = (word >> l.rn_lo) & rmask;
  const std::uint32_t rm = (word >> l.rm_lo) & rmask;
  const std::uint32_t imm = word & IsaConfig::mask(cfg.immediate_width);
  const std::uint32_t target = word & IsaConfig::mask(cfg.jump_addr_width);
  const std::uint32_t below_op = word & IsaConfig::mask(l.op_lo);

  std::optional<Op> op;
  for (Op candidate : kAllOps) {
    if (static_cast<std::uint32_t>(candidate) == opcode) op = candidate;
  }
  if (!op) {
    throw DecodeError(word, fmt::format("illegal opcode {:#x} in word {:#06x}",
                                        opcode, word));
  }

  Instruction in{*op};
  std::uint32_t used = 0;
  switch (format_of(*op)) {
    case Format::kR:
      in.rd = static_cast<std::uint8_t>(rd);
      in.rn = static_cast<std::uint8_t>(rn);
      in.rm = static_cast<std::uint8_t>(rm);
      used = (rmask << l.rd_lo) | (rmask << l.rn_lo) | (rmask << l.rm_lo);
      break;
    case Format::kI:
      in.rd = static_cast<std::uint8_t>(rd);
      in.rn = static_cast<std::uint8_t>(rn);
      in.imm = imm;
      used = (rmask << l.rd_lo) | (rmask << l.rn_lo) |
             IsaConfig::mask(cfg.immediate_width);
      break;
    case Format::kCB:
      in.rd = static_cast<std::uint8_t>(rd);
      in.imm = imm;
      used = (rmask << l.rd_lo) | IsaConfig::mask(cfg.immediate_width);
      break;
    case Format::kB:
      in.imm = target;
      used = IsaConfig::mask(cfg.jump_addr_width);
      break;
    case Format::kZ:
      break;
  }
  if (below_op & ~used) {
    throw DecodeError(word, fmt::format("reserved bits set in {} word {:#06x}",
                                        mnemonic(*op), word));
  }
  return in;
}

ArchState reset(const IsaConfig& cfg) {
  ArchState s;
  s.regs.assign(cfg.register_count(), 0);
  s.dmem.assign(cfg.memory_size(), 0);
  return s;
}

StepResult step(const ArchState& state, const MemImage& imem,
                const IsaConfig& cfg) {
  if (state.halted) {
    throw IsaError("Halted", "step called on a halted machine");
  }
  if (state.pc < imem.origin) throw FetchError(state.pc);
  const std::uint64_t index = (state.pc - imem.origin) / cfg.pc_increment;
  if (index >= imem.words.size()) throw FetchError(state.pc);

  const std::uint32_t word = imem.words[index];
  const Instruction in = decode(word, cfg);

  StepResult out{state, {}};
  ArchState& next = out.state;
  TraceRecord& rec = out.record;
  rec.pc = state.pc;
  rec.word = word;
  rec.instr = in;

  const std::uint32_t dmask = cfg.data_mask();
  const std::uint32_t amask = cfg.address_mask();
  auto reg = [&](unsigned r) -> std::uint32_t {
    return r == 0 ? 0 : state.regs[r];
  };
  auto write_reg = [&](unsigned r, std::uint32_t value) {
    rec.reg_write_data = value & dmask;
    rec.reg_written = static_cast<std::uint8_t>(r);
    if (r != 0) next.regs[r] = value & dmask;
  };
  const std::uint32_t simm = static_cast<std::uint32_t>(
      sign_extend(in.imm, cfg.immediate_width));
  std::uint32_t next_pc = (state.pc + cfg.pc_increment) & amask;

  switch (in.op) {
    case Op::kNop:
      break;
    case Op::kAdd:
      rec.alu_result = (reg(in.rn) + reg(in.rm)) & dmask;
      write_reg(in.rd, rec.alu_result);
      break;
    case Op::kSub:
      rec.alu_result = (reg(in.rn) - reg(in.rm)) & dmask;
      write_reg(in.rd, rec.alu_result);
      break;
    case Op::kAnd:
      rec.alu_result = reg(in.rn) & reg(in.rm);
      write_reg(in.rd, rec.alu_result);
      break;
    case Op::kOrr:
      rec.alu_result = reg(in.rn) | reg(in.rm);
      write_reg(in.rd, rec.alu_result);
      break;
    case Op::kAddi:
      rec.alu_result = (reg(in.rn) + simm) & dmask;
      write_reg(in.rd, rec.alu_result);
      break;
    case Op::kSubi:
      rec.alu_result = (reg(in.rn) - simm) & dmask;
      write_reg(in.rd, rec.alu_result);
      break;
    case Op::kLdur:
      rec.alu_result = (reg(in.rn) + simm) & dmask;
      write_reg(in.rd, state.dmem[rec.alu_result & amask]);
      break;
    case Op::kStur:
      rec.alu_result = (reg(in.rn) + simm) & dmask;
      next.dmem[rec.alu_result & amask] = reg(in.rd);
      break;
    case Op::kCbz:
      rec.alu_result = reg(in.rd);
      if (rec.alu_result == 0) {
        next_pc = (state.pc + simm * cfg.pc_increment) & amask;
      }
      break;
    case Op::kB:
      next_pc = in.imm & amask;
      break;
    case Op::kHalt:
      next.halted = true;
      next_pc = state.pc;
      break;
  }
  next.pc = next_pc;
  rec.next_pc = next_pc;
  rec.regs = next.regs;
  return out;
}

RunResult run(const MemImage& imem, std::uint64_t max_cycles,
              const IsaConfig& cfg) {
  RunResult result{reset(cfg), {}};
  for (std::uint64_t cycle = 0; cycle < max_cycles && !result.state.halted;
       ++cycle) {
    try {
      StepResult s = step(result.state, imem, cfg);
      s.record.cycle = cycle;
      result.state = std::move(s.state);
      result.trace.push_back(std::move(s.record));
    } catch (IsaError& e) {
      e.set_cycle(cycle);
      throw;
    }
  }
  return result;
}

nlohmann::json isa_table_json(const IsaConfig& cfg) {
  using nlohmann::json;
  const Layout l = layout(cfg);
  auto range = [](unsigned hi, unsigned lo) { return json::array({hi, lo}); };
  const unsigned iw = cfg.instruction_width;
  const unsigned rw = cfg.reg_addr_width;
  json fields_r = {{"opcode", range(iw - 1, l.op_lo)},
                   {"rd", range(l.rd_lo + rw - 1, l.rd_lo)},
                   {"rn", range(l.rn_lo + rw - 1, l.rn_lo)},
                   {"rm", range(l.rm_lo + rw - 1, l.rm_lo)}};
  json fields_i = {{"opcode", range(iw - 1, l.op_lo)},
                   {"rd", range(l.rd_lo + rw - 1, l.rd_lo)},
                   {"rn", range(l.rn_lo + rw - 1, l.rn_lo)},
                   {"imm", range(cfg.immediate_width - 1, 0)}};
  json fields_cb = {{"opcode", range(iw - 1, l.op_lo)},
                    {"rt", range(l.rd_lo + rw - 1, l.rd_lo)},
                    {"imm", range(cfg.immediate_width - 1, 0)}};
  json fields_b = {{"opcode", range(iw - 1, l.op_lo)},
                   {"addr", range(cfg.jump_addr_width - 1, 0)}};
  json fields_z = {{"opcode", range(iw - 1, l.op_lo)}};

  const std::map<Op, std::string> semantics = {
      {Op::kNop, "no operation"},
      {Op::kAdd, "rd = rn + rm"},
      {Op::kSub, "rd = rn - rm"},
      {Op::kAnd, "rd = rn & rm"},
      {Op::kOrr, "rd = rn | rm"},
      {Op::kAddi, "rd = rn + sext(imm)"},
      {Op::kSubi, "rd = rn - sext(imm)"},
      {Op::kLdur, "rd = mem[rn + sext(imm)]"},
      {Op::kStur, "mem[rn + sext(imm)] = rd"},
      {Op::kCbz, "if rt == 0: pc = pc + sext(imm) * PC_INCREMENT_VAL"},
      {Op::kB, "pc = addr (truncated to ADDRESS_WIDTH)"},
      {Op::kHalt, "stop; state frozen"},
  };

  json instrs = json::array();
  for (Op op : kAllOps) {
    json e;
    e["mnemonic"] = mnemonic(op);
    e["opcode"] = static_cast<unsigned>(op);
    switch (format_of(op)) {
      case Format::kR: e["format"] = "R"; e["fields"] = fields_r; break;
      case Format::kI: e["format"] = "I"; e["fields"] = fields_i; break;
      case Format::kCB: e["format"] = "CB"; e["fields"] = fields_cb; break;
      case Format::kB: e["format"] = "B"; e["fields"] = fields_b; break;
      case Format::kZ: e["format"] = "Z"; e["fields"] = fields_z; break;
    }
    e["semantics"] = semantics.at(op);
    instrs.push_back(std::move(e));
  }
  json doc;
  doc["schema_version"] = 1;
  doc["instruction_width"] = cfg.instruction_width;
  doc["data_width"] = cfg.data_width;
  doc["address_width"] = cfg.address_width;
  doc["pc_increment"] = cfg.pc_increment;
  doc["register_zero"] = "reads as 0, writes discarded";
  doc["illegal_opcodes"] = json::array({0xB, 0xC, 0xD, 0xE});
  doc["instructions"] = std::move(instrs);
  return doc;
}

}  // namespace archloop::isa
