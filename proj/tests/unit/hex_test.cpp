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

#include <gtest/gtest.h>

#include <random>

namespace archloop::isa {
namespace {

TEST(LoadHexTest, SingleHalt) {
  EXPECT_EQ(load_hex("F000\n").words, std::vector<std::uint32_t>{0xF000});
}

TEST(LoadHexTest, WrongWidth) {
  try {
    load_hex("12345\n");
    FAIL();
  } catch (const HexError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(LoadHexTest, EmptyImageRunsIntoFetchError) {
  MemImage img = load_hex("");
  EXPECT_TRUE(img.words.empty());
  EXPECT_THROW(run(img, 1), FetchError);
}

TEST(LoadHexTest, CommentsBlankLinesAndCase) {
  MemImage img = load_hex("// program\n\n5205 // addi\n  f000  \n");
  EXPECT_EQ(img.words, (std::vector<std::uint32_t>{0x5205, 0xF000}));
}

TEST(LoadHexTest, NonHexCharacter) {
  try {
    load_hex("0000\n00G0\n");
    FAIL();
  } catch (const HexError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(EmitHexTest, Formats) {
  EXPECT_EQ(emit_hex(MemImage{{0x0000}}), "0000\n");
  EXPECT_EQ(emit_hex(MemImage{{0xab}}), "00AB\n");
  EXPECT_EQ(emit_hex(MemImage{}), "");
}

TEST(EmitHexTest, RoundTripRandomWords) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    MemImage img;
    for (int i = 0; i < 64; ++i) img.words.push_back(rng() & 0xFFFF);
    EXPECT_EQ(load_hex(emit_hex(img)), img);
  }
}

}  // namespace
}  // namespace archloop::isa
