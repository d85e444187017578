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

#include "skipshield/harden.h"

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace skipshield {
namespace {

// Live at exit: the result registers plus sp/lr; flags as requested.
HardeningPolicy Policy(bool flags_live) {
  HardeningPolicy policy;
  policy.liveness.exit_live =
      RegAndFlags{RegSet{Reg::kR0, Reg::kR1, Reg::kSp, Reg::kLr}, flags_live};
  return policy;
}

std::string Harden(std::string_view text, const HardeningPolicy& policy,
                   HardeningReport* report = nullptr) {
  return EmitProgram(HardenProgram(ParseProgram(text), policy, report));
}

ErrorCode HardenError(std::string_view text, const HardeningPolicy& policy) {
  try {
    HardenProgram(ParseProgram(text), policy);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "hardened: " << text;
  return ErrorCode::kSyntax;
}

int Length(std::string_view text, bool flags_live = true) {
  HardeningReport report;
  HardenProgram(ParseProgram(text), Policy(flags_live), &report);
  EXPECT_EQ(report.records.size(), 1u) << text;
  return report.records.empty() ? -1 : report.records[0].replacement_length;
}

TEST(ReplacementLengthTest, PerRecipe) {
  EXPECT_EQ(Length("add r3, r1, r2\n"), 2);
  EXPECT_EQ(Length("add r1, r1, r3\n"), 4);
  EXPECT_EQ(Length("push {r1, r2, r3, lr}\n"), 6);
  EXPECT_EQ(Length("pop {r4, r5}\n"), 6);
  EXPECT_EQ(Length("str r1, [r2, #8]!\n"), 6);
  EXPECT_EQ(Length("ldr r1, [r2], #4\n"), 6);
  EXPECT_EQ(Length("umlal r0, r1, r2, r3\n"), 14);
  EXPECT_EQ(Length("subs r1, r2, r3, rrx\n"), 4);
  EXPECT_EQ(Length("adcs r1, r2, r3\n", false), 6);
  EXPECT_EQ(Length("rrxs r1, r2\n", false), 6);
}

TEST(ReplacementLengthTest, BlIsSixPlusReturnLabel) {
  HardeningReport report;
  const Program p =
      HardenProgram(ParseProgram("bl f\nf:\nnop\n"), Policy(true), &report);
  ASSERT_FALSE(report.records.empty());
  EXPECT_EQ(report.records[0].replacement_length, 6);
  ASSERT_GE(p.items.size(), 7u);
  for (int k = 0; k < 6; ++k) {
    EXPECT_TRUE(std::holds_alternative<Instruction>(p.items[k])) << k;
  }
  EXPECT_TRUE(std::holds_alternative<Label>(p.items[6]));
}

TEST(RecipeShapeTest, DestOverlapsSource) {
  EXPECT_EQ(Harden("add r1, r1, r3\n", Policy(true)),
            "mov r12, r1\n"
            "mov r12, r1\n"
            "add r1, r12, r3\n"
            "add r1, r12, r3\n");
}

TEST(RecipeShapeTest, Push) {
  EXPECT_EQ(Harden("push {r1, r2, r3, lr}\n", Policy(true)),
            "stmdb sp, {r1, r2, r3, lr}\n"
            "stmdb sp, {r1, r2, r3, lr}\n"
            "sub r12, sp, #16\n"
            "sub r12, sp, #16\n"
            "mov sp, r12\n"
            "mov sp, r12\n");
}

TEST(RecipeShapeTest, Umlal) {
  EXPECT_EQ(Harden("umlal r0, r1, r2, r3\n", Policy(true)),
            "mrs r12, apsr\n"
            "mrs r12, apsr\n"
            "umull r4, r5, r2, r3\n"
            "umull r4, r5, r2, r3\n"
            "adds r6, r4, r0\n"
            "adds r6, r4, r0\n"
            "adc r4, r5, r1\n"
            "adc r4, r5, r1\n"
            "mov r0, r6\n"
            "mov r0, r6\n"
            "mov r1, r4\n"
            "mov r1, r4\n"
            "msr apsr_nzcvq, r12\n"
            "msr apsr_nzcvq, r12\n");
}

TEST(RecipeShapeTest, RrxFlagSetter) {
  EXPECT_EQ(Harden("subs r1, r2, r3, rrx\n", Policy(true)),
            "rrx r12, r3\n"
            "rrx r12, r3\n"
            "subs r1, r2, r12\n"
            "subs r1, r2, r12\n");
}

TEST(RecipeShapeTest, Bl) {
  EXPECT_EQ(Harden("bl f\nf:\nnop\n", Policy(true)),
            "adr r12, .Lss0\n"
            "adr r12, .Lss0\n"
            "add lr, r12, #1\n"
            "add lr, r12, #1\n"
            "b f\n"
            "b f\n"
            ".Lss0:\n"
            "f:\n"
            "nop\n"
            "nop\n");
}

TEST(RecipeShapeTest, FlagsReadWrite) {
  EXPECT_EQ(Harden("adcs r1, r2, r3\n", Policy(false)),
            "mrs r12, apsr\n"
            "mrs r12, apsr\n"
            "adcs r1, r2, r3\n"
            "msr apsr_nzcvq, r12\n"
            "msr apsr_nzcvq, r12\n"
            "adcs r1, r2, r3\n");
}

TEST(RecipeShapeTest, FlagsReadWriteWithLiveFlagsFails) {
  EXPECT_EQ(HardenError("adcs r1, r2, r3\n", Policy(true)),
            ErrorCode::kFlagsAliveAfter);
  // movs leaves C and V alone, so the flags stay live.
  EXPECT_EQ(HardenError("adcs r1, r2, r3\nmovs r0, #0\n", Policy(true)),
            ErrorCode::kFlagsAliveAfter);
  EXPECT_NO_THROW(Harden("adcs r1, r2, r3\ncmp r0, #0\n", Policy(true)));
}

TEST(ScratchTest, AllocatesDeadRegistersInOrder) {
  const ScratchAllocation a =
      AllocateScratch(2, {Reg::kR12, Reg::kR2, Reg::kR3}, RegSet{}, true);
  EXPECT_EQ(a.regs, (std::vector<Reg>{Reg::kR12, Reg::kR2}));
  EXPECT_TRUE(a.spilled.empty());
}

TEST(ScratchTest, ExcludedRegistersAreSkipped) {
  const ScratchAllocation a =
      AllocateScratch(1, {Reg::kR12, Reg::kR2}, RegSet{Reg::kR12}, true);
  EXPECT_EQ(a.regs, std::vector<Reg>{Reg::kR2});
}

TEST(ScratchTest, SpillsWhenNothingIsDead) {
  const ScratchAllocation a = AllocateScratch(1, {}, RegSet{Reg::kR1}, true);
  ASSERT_EQ(a.regs.size(), 1u);
  EXPECT_EQ(a.spilled, a.regs);
  EXPECT_NE(a.regs[0], Reg::kR1);
  EXPECT_NE(a.regs[0], Reg::kSp);
  EXPECT_NE(a.regs[0], Reg::kPc);
}

TEST(ScratchTest, NoSpillIsAnError) {
  try {
    AllocateScratch(1, {}, RegSet{}, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoScratchAvailable);
  }
}

TEST(SpillTest, SavesBelowSpAndRestores) {
  HardeningPolicy policy;
  policy.liveness.exit_live = RegAndFlags{RegSet(0x7fff), true};
  HardeningReport report;
  EXPECT_EQ(Harden("add r1, r1, r3\n", policy, &report),
            "str r4, [sp, #-4]\n"
            "str r4, [sp, #-4]\n"
            "mov r4, r1\n"
            "mov r4, r1\n"
            "add r1, r4, r3\n"
            "add r1, r4, r3\n"
            "ldr r4, [sp, #-4]\n"
            "ldr r4, [sp, #-4]\n");
  ASSERT_EQ(report.records.size(), 1u);
  EXPECT_TRUE(report.records[0].spilled);
  policy.allow_stack_spill = false;
  EXPECT_EQ(HardenError("add r1, r1, r3\n", policy),
            ErrorCode::kNoScratchAvailable);
}

TEST(ScopeTest, OnlyInstructionsBetweenLabelsAreHardened) {
  HardeningPolicy policy;
  policy.ranges = {{"a", "b"}};
  HardeningReport report;
  EXPECT_EQ(Harden("mov r0, r0\na:\nadd r1, r1, #1\nb:\nadd r2, r2, #1\n",
                   policy, &report),
            "mov r0, r0\n"
            "a:\n"
            "mov r12, r1\n"
            "mov r12, r1\n"
            "add r1, r12, #1\n"
            "add r1, r12, #1\n"
            "b:\n"
            "add r2, r2, #1\n");
  EXPECT_EQ(report.original_in_scope, 1);
  EXPECT_EQ(report.hardened_in_scope, 4);
  EXPECT_EQ(report.original_total, 3);
  EXPECT_EQ(report.hardened_total, 6);
}

TEST(ScopeTest, EmptyScopeIsIdentity) {
  HardeningPolicy policy;
  policy.ranges = {{"a", "b"}};
  const std::string text = "add r1, r1, #1\na:\nb:\npush {r4, lr}\n";
  EXPECT_EQ(Harden(text, policy), EmitProgram(ParseProgram(text)));
}

TEST(ScopeTest, UnknownLabelIsConfigError) {
  HardeningPolicy policy;
  policy.ranges = {{"zz", "b"}};
  EXPECT_EQ(HardenError("a:\nb:\nnop\n", policy), ErrorCode::kConfig);
}

TEST(LabelTest, FreshLabelsAvoidExistingNames) {
  LabelAllocator labels({".Lss0", ".Lss2"});
  const std::string a = labels.Next();
  const std::string b = labels.Next();
  EXPECT_NE(a, ".Lss0");
  EXPECT_NE(b, ".Lss0");
  EXPECT_NE(a, ".Lss2");
  EXPECT_NE(b, ".Lss2");
  EXPECT_NE(a, b);
}

TEST(HardenTest, OutputReparsesAndIsStable) {
  const std::string text =
      "f:\n"
      "push {r4, lr}\n"
      "add r1, r1, r3\n"
      "ldr r0, [r0]\n"
      "str r1, [r2, #8]!\n"
      "cmp r0, #1\n"
      "itte ne\n"
      "addne r1, r2, #10\n"
      "eorne r3, r5, r1\n"
      "moveq r3, #10\n"
      "pop {r4, lr}\n"
      "bx lr\n";
  const std::string once = Harden(text, HardeningPolicy{});
  const Program reparsed = ParseProgram(once);
  EXPECT_EQ(EmitProgram(reparsed), once);
  EXPECT_EQ(Harden(text, HardeningPolicy{}), once);
}

// Instruction tokens of a listing; labels are renamed by first appearance.
std::vector<std::string> Tokens(const Program& p) {
  std::map<std::string, std::string> names;
  auto rename = [&](const std::string& name) {
    auto [it, added] = names.emplace(name, "L" + std::to_string(names.size()));
    return it->second;
  };
  std::vector<std::string> out;
  for (const Item& item : p.items) {
    if (const auto* label = std::get_if<Label>(&item)) {
      out.push_back(rename(label->name) + ":");
      continue;
    }
    const auto* inst = std::get_if<Instruction>(&item);
    if (!inst) continue;
    Instruction copy = *inst;
    for (Operand& op : copy.operands) {
      if (auto* ref = std::get_if<LabelRef>(&op)) ref->name = rename(ref->name);
    }
    std::istringstream words(EmitInstruction(copy));
    std::string w;
    while (words >> w) out.push_back(w);
  }
  return out;
}

constexpr char kItBlock[] =
    "itte ne\n"
    "addne r1, r2, #10\n"
    "eorne r3, r5, r1\n"
    "moveq r3, #10\n";

TEST(ItBlockTest, BranchExpansionMatchesReferenceListing) {
  const Program expected = ParseProgram(
      "b.eq else\n"
      "b.eq else\n"
      "add r1, r2, #10\n"
      "add r1, r2, #10\n"
      "eor r3, r5, r1\n"
      "eor r3, r5, r1\n"
      "b continuation\n"
      "b continuation\n"
      "else:\n"
      "mov r3, #10\n"
      "mov r3, #10\n"
      "continuation:\n");
  const Program got = HardenProgram(ParseProgram(kItBlock), Policy(true));
  EXPECT_EQ(Tokens(got), Tokens(expected)) << EmitProgram(got);
}

TEST(ItBlockTest, DuplicatedItPatterns) {
  HardeningPolicy policy = Policy(true);
  policy.it_strategy = ItStrategy::kDuplicatedIt;
  EXPECT_EQ(Harden(kItBlock, policy),
            "itttt ne\n"
            "ittt ne\n"
            "addne r1, r2, #10\n"
            "addne r1, r2, #10\n"
            "eorne r3, r5, r1\n"
            "ittee ne\n"
            "itee ne\n"
            "eorne r3, r5, r1\n"
            "moveq r3, #10\n"
            "moveq r3, #10\n");
}

TEST(ItBlockTest, RecordsCoverEverySlot) {
  HardeningReport report;
  HardenProgram(ParseProgram(kItBlock), Policy(true), &report);
  ASSERT_EQ(report.records.size(), 4u);
  EXPECT_EQ(report.records[0].classification.recipe, Recipe::kItBlock);
  EXPECT_EQ(report.original_in_scope, 4);
  EXPECT_EQ(report.hardened_in_scope, 10);
}

}  // namespace
}  // namespace skipshield
