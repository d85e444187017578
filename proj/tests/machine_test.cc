// Copyright 2026 The skipshield Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "skipshield/machine.h"

#include <random>
#include <string>

#include "gtest/gtest.h"

namespace skipshield {
namespace {

constexpr int kR0 = 0, kR1 = 1, kR2 = 2, kR3 = 3;

struct Fixture {
  std::vector<std::string> symbols;
  Sequence seq;
  ExecContext ctx;
};

Fixture Load(std::string_view text, int width) {
  Fixture f;
  f.seq = ParseSequence(text);
  f.ctx = ExecContext::ForSequence(f.seq, width, {}, &f.symbols);
  return f;
}

MachineState Exec(std::string_view text, int width,
                  std::initializer_list<std::pair<int, uint32_t>> regs,
                  uint8_t flags = 0, std::optional<int> skip = std::nullopt) {
  const Fixture f = Load(text, width);
  MachineState s = MakeState(AbstractMemory{});
  for (auto [r, v] : regs) s.regs[r] = v;
  s.flags = flags;
  return RunSequence(f.ctx, s, skip);
}

TEST(WidthTest, Masks) {
  EXPECT_EQ(WidthMask(2), 0x3u);
  EXPECT_EQ(WidthMask(4), 0xfu);
  EXPECT_EQ(WidthMask(8), 0xffu);
  EXPECT_EQ(WidthMask(32), 0xffffffffu);
}

TEST(ArithmeticTest, AddWrapsAtWidthFour) {
  const MachineState s =
      Exec("add r1, r2, r3\n", 4, {{kR2, 0xf}, {kR3, 0x2}}, kFlagZ);
  EXPECT_EQ(s.regs[kR1], 0x1u);
  EXPECT_EQ(s.flags, kFlagZ);  // no s suffix: flags untouched
}

TEST(ArithmeticTest, AddsSetsAllFourFlags) {
  MachineState s = Exec("adds r1, r2, r3\n", 4, {{kR2, 0xf}, {kR3, 0x1}});
  EXPECT_EQ(s.regs[kR1], 0x0u);
  EXPECT_EQ(s.flags, kFlagZ | kFlagC);
  s = Exec("adds r1, r2, r3\n", 4, {{kR2, 0x7}, {kR3, 0x1}});
  EXPECT_EQ(s.regs[kR1], 0x8u);
  EXPECT_EQ(s.flags, kFlagN | kFlagV);
}

TEST(ArithmeticTest, ImmediatesAreMaskedToWidth) {
  const MachineState s = Exec("add r1, r2, #17\n", 4, {{kR2, 0x1}});
  EXPECT_EQ(s.regs[kR1], 0x2u);
}

TEST(ArithmeticTest, RrxShiftsCarryIn) {
  MachineState s = Exec("rrx r1, r2\n", 4, {{kR2, 0x3}}, kFlagC);
  EXPECT_EQ(s.regs[kR1], 0x9u);
  EXPECT_EQ(s.flags, kFlagC);
  s = Exec("rrxs r1, r2\n", 4, {{kR2, 0x2}}, kFlagC);
  EXPECT_EQ(s.regs[kR1], 0x9u);
  EXPECT_EQ(s.flags, kFlagN);
}

TEST(ArithmeticTest, SubWithRrxOperand) {
  const MachineState s =
      Exec("subs r1, r2, r3, rrx\n", 4, {{kR2, 0x9}, {kR3, 0x2}}, kFlagC);
  // rrx(0b0010, C=1) = 0b1001
  EXPECT_EQ(s.regs[kR1], 0x0u);
  EXPECT_EQ(s.flags & (kFlagZ | kFlagC), kFlagZ | kFlagC);
}

TEST(ArithmeticTest, UmullAndUmlal) {
  MachineState s =
      Exec("umull r0, r1, r2, r3\n", 4, {{kR2, 0xf}, {kR3, 0xf}});
  EXPECT_EQ(s.regs[kR0], 0x1u);  // 225 = 0xe1
  EXPECT_EQ(s.regs[kR1], 0xeu);
  s = Exec("umlal r0, r1, r2, r3\n", 4,
           {{kR0, 0xf}, {kR1, 0x1}, {kR2, 0x1}, {kR3, 0x1}});
  EXPECT_EQ(s.regs[kR0], 0x0u);
  EXPECT_EQ(s.regs[kR1], 0x2u);
}

TEST(FaultTest, SkipOmitsExactlyOneInstruction) {
  constexpr char kText[] =
      "add r1, r1, #1\n"
      "add r1, r1, #2\n"
      "add r1, r1, #4\n";
  EXPECT_EQ(Exec(kText, 8, {}).regs[kR1], 7u);
  EXPECT_EQ(Exec(kText, 8, {}, 0, 0).regs[kR1], 6u);
  EXPECT_EQ(Exec(kText, 8, {}, 0, 1).regs[kR1], 5u);
  EXPECT_EQ(Exec(kText, 8, {}, 0, 2).regs[kR1], 3u);
  EXPECT_TRUE(Exec(kText, 8, {}, 0, 1).fault_occurred);
  EXPECT_FALSE(Exec(kText, 8, {}).fault_occurred);
}

TEST(FaultTest, SkippedItSlotStillAdvancesTheBlock) {
  constexpr char kText[] =
      "ite eq\n"
      "moveq r1, #1\n"
      "movne r2, #1\n"
      "mov r3, #1\n";
  // Z set: then-slot runs, else-slot does not.
  MachineState s = Exec(kText, 4, {}, kFlagZ, 1);
  EXPECT_EQ(s.regs[kR1], 0u);
  EXPECT_EQ(s.regs[kR2], 0u);
  EXPECT_EQ(s.regs[kR3], 1u);
  // Skipping the it itself runs both slots unconditionally.
  s = Exec(kText, 4, {}, kFlagZ, 0);
  EXPECT_EQ(s.regs[kR1], 1u);
  EXPECT_EQ(s.regs[kR2], 1u);
}

TEST(ControlTest, ConditionalBranch) {
  constexpr char kText[] =
      "cmp r0, #3\n"
      "beq L\n"
      "mov r1, #1\n"
      "L:\n"
      "mov r2, #1\n";
  MachineState s = Exec(kText, 4, {{kR0, 3}});
  EXPECT_EQ(s.regs[kR1], 0u);
  EXPECT_EQ(s.regs[kR2], 1u);
  s = Exec(kText, 4, {{kR0, 2}});
  EXPECT_EQ(s.regs[kR1], 1u);
  EXPECT_EQ(s.exit.kind, ExitKind::kFallthrough);
}

TEST(ControlTest, ExternalBranchExit) {
  const MachineState s = Exec("b somewhere\nmov r1, #1\n", 4, {});
  EXPECT_EQ(s.exit.kind, ExitKind::kLabel);
  EXPECT_EQ(s.regs[kR1], 0u);
}

TEST(ControlTest, BlCountsCalls) {
  std::vector<std::string> symbols;
  const Sequence seq = ParseSequence("bl f\nmov r1, #1\n");
  const ExecContext ctx = ExecContext::ForSequence(seq, 4, {"f"}, &symbols);
  const MachineState s = RunSequence(ctx, MakeState(AbstractMemory{}));
  EXPECT_EQ(s.call_counter, 1u);
  EXPECT_EQ(s.regs[kR1], 1u);
  EXPECT_EQ(s.exit.kind, ExitKind::kFallthrough);
}

TEST(ControlTest, LoopBoundIsNonTermination) {
  const Fixture f = Load("L:\nb L\n", 4);
  EXPECT_THROW(RunSequence(f.ctx, MakeState(AbstractMemory{})), Error);
  MachineState s = MakeState(AbstractMemory{});
  EXPECT_EQ(skipshield::Run(f.ctx, s, {}), RunStatus::kNonTermination);
}

TEST(MemoryTest, AbstractStoreThenLoad) {
  const MachineState s = Exec(
      "str r1, [r2, #4]\n"
      "ldr r3, [r2, #4]\n",
      4, {{kR1, 0x9}, {kR2, 0x2}});
  EXPECT_EQ(s.regs[kR3], 0x9u);
  EXPECT_EQ(s.store_counter, 1u);
}

TEST(MemoryTest, LoadsComeFromTheEnvironment) {
  const Fixture f = Load("ldr r1, [r0]\nldr r2, [r0]\nldr r3, [r0, #4]\n", 4);
  LoadEnvironment env({0x5, 0xa});
  AbstractMemory mem;
  mem.env = &env;
  const MachineState s = RunSequence(f.ctx, MakeState(mem));
  EXPECT_EQ(s.regs[kR1], 0x5u);
  EXPECT_EQ(s.regs[kR2], 0x5u);  // same key, same value
  EXPECT_EQ(s.regs[kR3], 0xau);
  EXPECT_FALSE(env.overflow());
}

TEST(MemoryTest, ConcreteLittleEndian) {
  ConcreteMemory mem;
  mem.AddRegion(0x100, {0x11, 0x22, 0x33, 0x44});
  EXPECT_EQ(mem.Read(0x100, 4), 0x44332211u);
  EXPECT_EQ(mem.Read(0x101, 2), 0x3322u);
  EXPECT_FALSE(mem.Read(0x102, 4).has_value());
  EXPECT_TRUE(mem.Write(0x100, 1, 0xff));
  EXPECT_EQ(mem.Read(0x100, 1), 0xffu);
  EXPECT_FALSE(mem.Write(0x200, 4, 0));
}

TEST(MemoryTest, ConcreteFaultIsReported) {
  const Program p = ParseProgram("ldr r1, [r0]\n");
  const ExecContext ctx = ExecContext::ForProgram(p, 32);
  ConcreteMemory mem;
  mem.AddRegion(0x20000000, std::vector<uint8_t>(16));
  MachineState s = MakeState(mem);
  s.regs[kR0] = 0x30000000;
  EXPECT_EQ(skipshield::Run(ctx, s, {}), RunStatus::kMemoryFault);
  s = MakeState(mem);
  s.regs[kR0] = 0x20000004;
  EXPECT_EQ(skipshield::Run(ctx, s, {}), RunStatus::kFinished);
}

TEST(ProgramLayoutTest, FourBytesPerInstruction) {
  const Program p = ParseProgram("nop\nL:\nnop\nnop\n");
  const ExecContext ctx = ExecContext::ForProgram(p, 32, 0x1000);
  EXPECT_EQ(ctx.IndexOfAddress(0x1000), 0);
  EXPECT_EQ(ctx.IndexOfAddress(0x1008), 2);
  EXPECT_EQ(ctx.LabelIndex("L"), 1);
}

TEST(ProgramLayoutTest, DynamicSkipIndexCountsExecutions) {
  const Program p = ParseProgram(
      "mov r0, #3\n"
      "L:\n"
      "add r1, r1, #1\n"
      "subs r0, r0, #1\n"
      "bne L\n");
  const ExecContext ctx = ExecContext::ForProgram(p, 32);
  MachineState ref = MakeState(ConcreteMemory{});
  ASSERT_EQ(skipshield::Run(ctx, ref, {}), RunStatus::kFinished);
  EXPECT_EQ(ref.regs[kR1], 3u);
  EXPECT_EQ(ref.executed, 10u);
  // The second pass through the add is execution number 4.
  MachineState s = MakeState(ConcreteMemory{});
  RunOptions options;
  options.skip_dynamic = 4;
  ASSERT_EQ(skipshield::Run(ctx, s, options), RunStatus::kFinished);
  EXPECT_EQ(s.regs[kR1], 2u);
}

// Flags from the model against plain 64-bit arithmetic.
TEST(FlagPropertyTest, AddSubCarryOverflowAtWidthEight) {
  std::mt19937 rng(8);
  std::uniform_int_distribution<uint32_t> byte(0, 255), bit(0, 1), pick(0, 3);
  const char* kOps[] = {"adds", "subs", "adcs", "sbcs"};
  for (int t = 0; t < 1000; ++t) {
    const uint32_t a = byte(rng), b = byte(rng), c = bit(rng);
    const int op = pick(rng);
    const MachineState s =
        Exec(std::string(kOps[op]) + " r1, r2, r3\n", 8, {{kR2, a}, {kR3, b}},
             c ? kFlagC : 0);
    int64_t ua = a, ub = b, sa = static_cast<int8_t>(a),
            sb = static_cast<int8_t>(b);
    int64_t carry_in = op == 0 ? 0 : op == 1 ? 1 : c;
    if (op == 1 || op == 3) {
      ub = 255 - ub;
      sb = static_cast<int8_t>(static_cast<uint8_t>(~b));
    }
    const int64_t usum = ua + ub + carry_in;
    const int64_t ssum = sa + sb + carry_in;
    const uint32_t result = static_cast<uint32_t>(usum & 0xff);
    uint8_t flags = 0;
    if (result & 0x80) flags |= kFlagN;
    if (result == 0) flags |= kFlagZ;
    if (usum > 255) flags |= kFlagC;
    if (ssum < -128 || ssum > 127) flags |= kFlagV;
    ASSERT_EQ(s.regs[kR1], result) << kOps[op] << " " << a << " " << b;
    ASSERT_EQ(s.flags, flags) << kOps[op] << " " << a << " " << b << " " << c;
  }
}

TEST(FlagPropertyTest, PackUnpackRoundTrip) {
  for (int width : {5, 8, 32}) {
    for (uint8_t f = 0; f <= kAllFlags; ++f) {
      EXPECT_EQ(UnpackFlags(PackFlags(f, width), width), f) << width;
    }
  }
  // Below five bits Q does not fit.
  for (uint8_t f = 0; f <= kNzcvFlags; ++f) {
    EXPECT_EQ(UnpackFlags(PackFlags(f, 4), 4), f);
  }
}

}  // namespace
}  // namespace skipshield
