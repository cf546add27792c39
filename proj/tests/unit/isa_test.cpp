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

#include <gtest/gtest.h>

#include <random>

#include "support/random_programs.hpp"
#include "support/reference_interpreter.hpp"

namespace archloop::isa {
namespace {

using testing::pack;
using testing::pack_r;

TEST(EncodeTest, NopIsAllZero) { EXPECT_EQ(encode(Instruction::nop()), 0x0000u); }

TEST(EncodeTest, AddFieldsLandInTheirSlots) {
  // Frozen from the bit-packing oracle: opcode 1, rd 1, rn 2, rm 3.
  constexpr std::uint16_t kExpected = 0x1298;
  static_assert(pack_r(0x1, 1, 2, 3) == kExpected);
  EXPECT_EQ(encode(Instruction::r(Op::kAdd, 1, 2, 3)), kExpected);
}

TEST(EncodeTest, AddiImmediateFieldAllOnes) {
  constexpr std::uint16_t kExpected = 0x527F;
  static_assert(pack(0x5, 1, 1, 0b111111) == kExpected);
  EXPECT_EQ(encode(Instruction::i(Op::kAddi, 1, 1, 63)), kExpected);
}

TEST(EncodeTest, OverflowingFieldsThrowRangeError) {
  EXPECT_THROW(encode(Instruction::r(Op::kAdd, 8, 0, 0)), RangeError);
  EXPECT_THROW(encode(Instruction::i(Op::kAddi, 1, 1, 64)), RangeError);
  EXPECT_THROW(encode(Instruction::b(0x1000)), RangeError);
  // Fields the format does not use must be zero.
  EXPECT_THROW(encode(Instruction{Op::kHalt, 1}), RangeError);
  EXPECT_THROW(encode(Instruction{Op::kCbz, 1, 2, 0, 0}), RangeError);
}

TEST(DecodeTest, ZeroIsNop) { EXPECT_EQ(decode(0x0000), Instruction::nop()); }

TEST(DecodeTest, RoundTripsSub) {
  Instruction sub = Instruction::r(Op::kSub, 4, 4, 4);
  EXPECT_EQ(decode(encode(sub)), sub);
}

TEST(DecodeTest, UnassignedOpcodesAreIllegal) {
  for (unsigned opc = 0xB; opc <= 0xE; ++opc) {
    EXPECT_THROW(decode(opc << 12), DecodeError) << opc;
  }
  EXPECT_THROW(decode(0xC123), DecodeError);
}

TEST(DecodeTest, ReservedBitsAreRejected) {
  EXPECT_THROW(decode(0x1299), DecodeError);  // ADD with bit 0 set
  EXPECT_THROW(decode(0xF001), DecodeError);  // HALT with payload
  EXPECT_THROW(decode(0x9245), DecodeError);  // CBZ with rn != 0
  EXPECT_THROW(decode(0x10000), DecodeError);
}

// Exhaustive: every encodable instruction of every mnemonic.
TEST(DecodeTest, BijectionOverAllEncodableInstructions) {
  std::size_t count = 0;
  std::vector<bool> seen(1u << 16, false);
  auto check = [&](const Instruction& in) {
    std::uint32_t w = encode(in);
    ASSERT_FALSE(seen[w]) << "two instructions share word " << w;
    seen[w] = true;
    ASSERT_EQ(decode(w), in);
    ++count;
  };
  for (Op op : kAllOps) {
    switch (format_of(op)) {
      case Format::kR:
        for (unsigned a = 0; a < 8; ++a)
          for (unsigned b = 0; b < 8; ++b)
            for (unsigned c = 0; c < 8; ++c) check(Instruction::r(op, a, b, c));
        break;
      case Format::kI:
        for (unsigned a = 0; a < 8; ++a)
          for (unsigned b = 0; b < 8; ++b)
            for (unsigned imm = 0; imm < 64; ++imm) check(Instruction::i(op, a, b, imm));
        break;
      case Format::kCB:
        for (unsigned a = 0; a < 8; ++a)
          for (unsigned imm = 0; imm < 64; ++imm) check(Instruction::cbz(a, imm));
        break;
      case Format::kB:
        for (unsigned t = 0; t < 4096; ++t) check(Instruction::b(t));
        break;
      case Format::kZ:
        check(Instruction{op});
        break;
    }
  }
  EXPECT_EQ(count, 4u * 512 + 4u * 4096 + 512 + 4096 + 2);
  // Every word that is not an encoding fails to decode.
  for (std::uint32_t w = 0; w < (1u << 16); ++w) {
    if (!seen[w]) {
      EXPECT_THROW(decode(w), DecodeError) << w;
    }
  }
}

TEST(ConfigTest, DefaultWidthsValidate) {
  IsaConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  IsaConfig bad = cfg;
  bad.immediate_width = 7;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ConfigTest, FromParameters) {
  IsaConfig cfg = IsaConfig::from_parameters(
      {{"DATA_WIDTH", 8}, {"INSTRUCTION_WIDTH", 16}, {"PC_INCREMENT_VAL", 2}});
  EXPECT_EQ(cfg, IsaConfig{});
}

TEST(ResetTest, EverythingZero) {
  ArchState s = reset();
  EXPECT_EQ(s.pc, 0u);
  EXPECT_EQ(s.regs, std::vector<std::uint32_t>(8, 0));
  EXPECT_EQ(s.dmem.size(), 256u);
  EXPECT_EQ(s.dmem[200], 0u);
  EXPECT_FALSE(s.halted);
  EXPECT_EQ(reset(), reset());
}

MemImage image(std::vector<Instruction> program) {
  MemImage img;
  for (const auto& in : program) img.words.push_back(encode(in));
  return img;
}

TEST(StepTest, AddWritesSum) {
  ArchState s = reset();
  s.regs[2] = 5;
  s.regs[3] = 7;
  auto img = image({Instruction::r(Op::kAdd, 1, 2, 3)});
  StepResult r = step(s, img);
  EXPECT_EQ(r.state.regs[1], 12u);
  EXPECT_EQ(r.state.pc, 2u);
  EXPECT_EQ(r.record.alu_result, 12u);
  EXPECT_EQ(r.record.reg_write_data, 12u);
  // Input untouched.
  EXPECT_EQ(s.regs[1], 0u);
  EXPECT_EQ(s.pc, 0u);
}

TEST(StepTest, NopOnlyAdvancesPc) {
  ArchState s = reset();
  s.regs[4] = 9;
  s.dmem[3] = 1;
  StepResult r = step(s, image({Instruction::nop()}));
  ArchState expected = s;
  expected.pc = 2;
  EXPECT_EQ(r.state, expected);
}

TEST(StepTest, WritesToRegisterZeroAreDiscarded) {
  ArchState s = reset();
  s.regs[5] = 0x41;
  StepResult r = step(s, image({Instruction::r(Op::kAdd, 0, 5, 5)}));
  EXPECT_EQ(r.state.regs[0], 0u);
  EXPECT_EQ(r.state.pc, 2u);
}

TEST(StepTest, ArithmeticWraps) {
  ArchState s = reset();
  s.regs[1] = 0xFF;
  StepResult r = step(s, image({Instruction::i(Op::kAddi, 2, 1, 1)}));
  EXPECT_EQ(r.state.regs[2], 0u);
  r = step(reset(), image({Instruction::i(Op::kSubi, 2, 0, 1)}));
  EXPECT_EQ(r.state.regs[2], 0xFFu);
}

TEST(StepTest, LoadStoreUseSignedOffsets) {
  ArchState s = reset();
  s.regs[1] = 10;
  s.regs[2] = 0x5A;
  // STUR r2, [r1, #-2]  then  LDUR r3, [r1, #-2]
  auto img = image({Instruction::i(Op::kStur, 2, 1, 62),
                    Instruction::i(Op::kLdur, 3, 1, 62)});
  StepResult a = step(s, img);
  EXPECT_EQ(a.state.dmem[8], 0x5Au);
  EXPECT_EQ(a.record.alu_result, 8u);
  EXPECT_FALSE(a.record.reg_written.has_value());
  StepResult b = step(a.state, img);
  EXPECT_EQ(b.state.regs[3], 0x5Au);
  EXPECT_EQ(b.record.reg_write_data, 0x5Au);
}

TEST(StepTest, CbzTakenAndNotTaken) {
  auto img = image({Instruction::nop(), Instruction::cbz(1, 63),
                    Instruction::nop()});
  ArchState s = reset();
  s.pc = 2;
  StepResult taken = step(s, img);
  EXPECT_EQ(taken.state.pc, 0u);  // 2 + (-1 * 2)
  s.regs[1] = 3;
  StepResult fall = step(s, img);
  EXPECT_EQ(fall.state.pc, 4u);
  EXPECT_EQ(fall.record.alu_result, 3u);
}

TEST(StepTest, BranchTargetIsTruncatedToAddressWidth) {
  auto img = image({Instruction::b(0x106)});
  StepResult r = step(reset(), img);
  EXPECT_EQ(r.state.pc, 0x06u);
}

TEST(StepTest, HaltFreezes) {
  StepResult r = step(reset(), image({Instruction::halt()}));
  EXPECT_TRUE(r.state.halted);
  EXPECT_EQ(r.state.pc, 0u);
  EXPECT_THROW(step(r.state, image({Instruction::halt()})), IsaError);
}

TEST(StepTest, FetchAndDecodeErrors) {
  EXPECT_THROW(step(reset(), MemImage{}), FetchError);
  EXPECT_THROW(step(reset(), MemImage{{0xC000}}), DecodeError);
}

TEST(RunTest, HaltOnly) {
  RunResult r = run(image({Instruction::halt()}), 100);
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_TRUE(r.state.halted);
}

TEST(RunTest, AddiThenHalt) {
  RunResult r = run(image({Instruction::i(Op::kAddi, 1, 0, 5), Instruction::halt()}), 10);
  EXPECT_EQ(r.state.regs[1], 5u);
  EXPECT_EQ(r.trace.size(), 2u);
}

TEST(RunTest, BoundedInfiniteLoop) {
  RunResult r = run(image({Instruction::b(0)}), 10);
  EXPECT_EQ(r.trace.size(), 10u);
  EXPECT_FALSE(r.state.halted);
  EXPECT_EQ(r.trace.back().cycle, 9u);
}

TEST(RunTest, ErrorsCarryCycle) {
  try {
    run(image({Instruction::nop(), Instruction::nop()}), 10);
    FAIL() << "expected FetchError";
  } catch (const FetchError& e) {
    ASSERT_TRUE(e.cycle().has_value());
    EXPECT_EQ(*e.cycle(), 2u);
    EXPECT_EQ(e.pc(), 4u);
  }
  EXPECT_THROW(run(MemImage{}, 1), FetchError);
}

TEST(PropertyTest, StraightLinePcAdvancesByIncrement) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    MemImage img;
    const std::size_t n = 1 + rng() % 30;
    for (std::size_t i = 0; i < n; ++i) {
      Instruction in;
      do {
        in = testing::random_instruction(rng, n, false);
      } while (in.op == Op::kCbz || in.op == Op::kB);
      img.words.push_back(encode(in));
    }
    RunResult r = run(img, n);
    ASSERT_EQ(r.state.pc, (n * 2) & 0xFF);
  }
}

TEST(PropertyTest, ValuesStayWithinWidths) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    MemImage img{testing::random_program(rng, 20)};
    ArchState s = reset();
    for (int c = 0; c < 40 && !s.halted; ++c) {
      StepResult r;
      try {
        r = step(s, img);
      } catch (const IsaError&) {
        break;
      }
      s = r.state;
      ASSERT_LE(s.pc, 0xFFu);
      ASSERT_EQ(s.regs[0], 0u);
      for (auto v : s.regs) ASSERT_LE(v, 0xFFu);
      ASSERT_LE(r.record.alu_result, 0xFFu);
      ASSERT_LE(r.record.reg_write_data, 0xFFu);
    }
  }
}

TEST(PropertyTest, AgreesWithReferenceInterpreter) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    auto words = testing::random_program(rng, 20);
    std::vector<std::uint16_t> raw(words.begin(), words.end());
    MemImage img{words};
    ArchState s = reset();
    testing::RefMachine m;
    for (int cycle = 0; cycle < 60 && !s.halted; ++cycle) {
      ASSERT_EQ(s.pc, m.pc) << "trial " << trial << " cycle " << cycle;
      auto st = testing::ref_step(m, raw);
      ASSERT_NE(st, testing::RefStatus::kIllegal);
      if (st == testing::RefStatus::kFetchFault) {
        EXPECT_THROW(step(s, img), FetchError);
        break;
      }
      s = step(s, img).state;
      for (unsigned i = 0; i < 8; ++i) ASSERT_EQ(s.regs[i], m.r[i]);
      ASSERT_EQ(s.halted, m.halted);
    }
  }
}

TEST(IsaTableTest, ListsEveryMnemonic) {
  auto table = isa_table_json();
  ASSERT_EQ(table["instructions"].size(), kAllOps.size());
  EXPECT_EQ(table["instructions"][1]["mnemonic"], "ADD");
  EXPECT_EQ(table["instructions"][1]["fields"]["rm"], nlohmann::json::array({5, 3}));
}

TEST(DisassembleTest, Forms) {
  EXPECT_EQ(disassemble(Instruction::i(Op::kAddi, 1, 0, 63)), "ADDI r1, r0, #-1");
  EXPECT_EQ(disassemble(Instruction::r(Op::kOrr, 1, 2, 3)), "ORR r1, r2, r3");
  EXPECT_EQ(disassemble(Instruction::halt()), "HALT");
}

}  // namespace
}  // namespace archloop::isa
