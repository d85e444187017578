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

#include "skipshield/verifier.h"

#include <set>
#include <string>

#include "gtest/gtest.h"

namespace skipshield {
namespace {

EquivalenceSpec Spec(RegSet interest, RegSet scratch = {}) {
  EquivalenceSpec spec;
  spec.registers_of_interest = interest;
  spec.scratch = scratch;
  return spec;
}

constexpr char kListing1[] =
    "mov r12, r1\n"
    "mov r12, r1\n"
    "add r1, r12, r3\n"
    "add r1, r12, r3\n";

TEST(ScenarioTest, OneFaultFreePlusOnePerInstruction) {
  const auto scenarios =
      EnumerateFaultScenarios(ParseSequence("L:\nnop\nnop\nM:\nnop\n"));
  ASSERT_EQ(scenarios.size(), 4u);
  EXPECT_FALSE(scenarios[0].has_value());
  for (int k = 0; k < 3; ++k) EXPECT_EQ(scenarios[k + 1], k);
  EXPECT_EQ(EnumerateFaultScenarios({}).size(), 1u);
}

TEST(VerifierTest, DestOverlapRecipePasses) {
  const Verdict v =
      CheckEquivalence(ParseInstruction("add r1, r1, r3"),
                       ParseSequence(kListing1),
                       Spec({Reg::kR1, Reg::kR3}, {Reg::kR12}));
  EXPECT_TRUE(v.passed);
  EXPECT_TRUE(v.exhaustive);
  EXPECT_EQ(v.scenarios, 5);
  EXPECT_EQ(v.states_explored, 256u);
  EXPECT_FALSE(v.counterexample.has_value());
}

TEST(VerifierTest, NaiveDuplicationOfOverlapFails) {
  const Verdict v = CheckEquivalence(
      ParseInstruction("add r1, r1, r3"),
      ParseSequence("add r1, r1, r3\nadd r1, r1, r3\n"),
      Spec({Reg::kR1, Reg::kR3}));
  EXPECT_FALSE(v.passed);
  EXPECT_NE(v.property_failed, Property::kNone);
  ASSERT_TRUE(v.counterexample.has_value());
  EXPECT_EQ(v.counterexample->mismatch.observable, "r1");
}

TEST(VerifierTest, UnprotectedInstructionFailsUnderSkip) {
  const Verdict v = CheckEquivalence(ParseInstruction("mov r1, r2"),
                                     ParseSequence("mov r1, r2\n"),
                                     Spec({Reg::kR1, Reg::kR2}));
  EXPECT_FALSE(v.passed);
  EXPECT_EQ(v.property_failed, Property::kP3);
  ASSERT_TRUE(v.counterexample.has_value());
  EXPECT_EQ(v.counterexample->skip, 0);
}

TEST(VerifierTest, ScratchRegistersMayNotBeRead) {
  const Verdict v = CheckEquivalence(
      ParseInstruction("mov r1, r2"),
      ParseSequence("mov r1, r12\nmov r1, r12\n"),
      Spec({Reg::kR1, Reg::kR2}, {Reg::kR12}));
  EXPECT_FALSE(v.passed);
}

TEST(VerifierTest, StoreCount) {
  EquivalenceSpec spec = Spec({Reg::kR0, Reg::kR1});
  spec.require_store_count = true;
  const Verdict dup = CheckEquivalence(ParseInstruction("str r0, [r1]"),
                                       ParseSequence("str r0, [r1]\n"
                                                     "str r0, [r1]\n"),
                                       spec);
  EXPECT_TRUE(dup.passed);
  EXPECT_EQ(dup.original_stores, 1u);
  EXPECT_EQ(dup.min_replacement_stores, 1u);
  EXPECT_EQ(dup.max_replacement_stores, 2u);
  const Verdict single = CheckEquivalence(ParseInstruction("str r0, [r1]"),
                                          ParseSequence("str r0, [r1]\n"),
                                          spec);
  EXPECT_FALSE(single.passed);
}

TEST(VerifierTest, StoreToWrongAddressIsCaught) {
  const Verdict v = CheckEquivalence(
      ParseInstruction("str r0, [r1]"),
      ParseSequence("str r0, [r1]\nstr r0, [r1, #4]\n"),
      Spec({Reg::kR0, Reg::kR1}));
  EXPECT_FALSE(v.passed);
}

const CatalogEntry& Entry(const std::vector<CatalogEntry>& catalog,
                          const std::string& name) {
  for (const CatalogEntry& e : catalog) {
    if (e.name == name) return e;
  }
  ADD_FAILURE() << "no catalog entry " << name;
  return catalog.front();
}

int InstructionCount(const Sequence& seq) {
  int n = 0;
  for (const Item& item : seq) n += std::holds_alternative<Instruction>(item);
  return n;
}

TEST(AdcsTest, StrictFailsAtTheFinalAdcsRelaxedPasses) {
  const std::vector<CatalogEntry> catalog = BuiltinCatalog();
  const CatalogEntry& strict = Entry(catalog, "adcs-strict");
  const CatalogEntry& relaxed = Entry(catalog, "adcs-relaxed");
  EXPECT_FALSE(strict.expect_pass);
  EXPECT_EQ(strict.spec.compare_flags, FlagMode::kStrict);
  EXPECT_EQ(relaxed.spec.compare_flags, FlagMode::kRelaxed);

  const Verdict fail =
      CheckEquivalence(strict.original, strict.replacement, strict.spec);
  EXPECT_FALSE(fail.passed);
  EXPECT_EQ(fail.property_failed, Property::kP3);
  ASSERT_TRUE(fail.counterexample.has_value());
  const int last = InstructionCount(strict.replacement) - 1;
  EXPECT_EQ(fail.counterexample->skip, last);
  EXPECT_EQ(fail.counterexample->mismatch.observable.rfind("flag", 0), 0u);

  EXPECT_TRUE(
      CheckEquivalence(relaxed.original, relaxed.replacement, relaxed.spec)
          .passed);
}

TEST(CounterexampleTest, ReplayReproducesTheMismatch) {
  const std::vector<CatalogEntry> catalog = BuiltinCatalog();
  const CatalogEntry& e = Entry(catalog, "adcs-strict");
  const Verdict v = CheckEquivalence(e.original, e.replacement, e.spec);
  ASSERT_TRUE(v.counterexample.has_value());
  const auto replayed = ReplayCounterexample(e.original, e.replacement, e.spec,
                                             4, *v.counterexample);
  ASSERT_TRUE(replayed.has_value());
  EXPECT_EQ(*replayed, v.counterexample->mismatch);
}

TEST(CounterexampleTest, ReplayOfAPassingCaseFindsNothing) {
  const Sequence original = ParseSequence("add r1, r1, r3\n");
  const Sequence replacement = ParseSequence(kListing1);
  Counterexample cx;
  cx.regs[1] = 3;
  cx.regs[3] = 5;
  cx.skip = 2;
  EXPECT_FALSE(ReplayCounterexample(original, replacement,
                                    Spec({Reg::kR1, Reg::kR3}, {Reg::kR12}),
                                    4, cx)
                   .has_value());
}

TEST(DeterminismTest, ThreadCountDoesNotChangeTheVerdict) {
  const Sequence original = ParseSequence("add r1, r1, r3\n");
  const Sequence bad = ParseSequence("add r1, r1, r3\nadd r1, r1, r3\n");
  const EquivalenceSpec spec = Spec({Reg::kR1, Reg::kR3});
  VerifyOptions one;
  VerifyOptions four;
  four.threads = 4;
  const Verdict a = CheckEquivalence(original, bad, spec, one);
  const Verdict b = CheckEquivalence(original, bad, spec, four);
  EXPECT_EQ(a.passed, b.passed);
  EXPECT_EQ(a.property_failed, b.property_failed);
  ASSERT_TRUE(a.counterexample && b.counterexample);
  EXPECT_EQ(a.counterexample->regs, b.counterexample->regs);
  EXPECT_EQ(a.counterexample->skip, b.counterexample->skip);
  EXPECT_EQ(a.counterexample->mismatch, b.counterexample->mismatch);
}

TEST(StateSpaceTest, TooLargeThrowsUnlessSampling) {
  const Sequence original = ParseSequence("add r1, r1, r3\n");
  const Sequence replacement = ParseSequence(kListing1);
  const EquivalenceSpec spec = Spec({Reg::kR1, Reg::kR3}, {Reg::kR12});
  VerifyOptions options;
  options.max_log2_states = 4;
  try {
    CheckEquivalence(original, replacement, spec, options);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStateSpaceTooLarge);
  }
  options.sample_states = 50;
  const Verdict v = CheckEquivalence(original, replacement, spec, options);
  EXPECT_TRUE(v.passed);
  EXPECT_FALSE(v.exhaustive);
  EXPECT_EQ(v.states_explored, 50u);
}

TEST(CatalogTest, CoversEveryRecipe) {
  const std::vector<CatalogEntry> catalog = BuiltinCatalog();
  EXPECT_GE(catalog.size(), 12u);
  std::set<std::string> names, recipes;
  for (const CatalogEntry& e : catalog) {
    EXPECT_TRUE(names.insert(e.name).second) << e.name;
    recipes.insert(e.recipe);
  }
  for (const char* r :
       {"duplicate", "dest-overlaps-source", "stack-manipulation",
        "pre/post-indexed-address", "umlal-split", "rrx-flag-split",
        "subroutine-call", "flags-read-write", "it-block"}) {
    EXPECT_TRUE(recipes.count(r)) << r;
  }
}

TEST(CatalogTest, VerdictsMatchExpectationsAtWidthTwo) {
  VerifyOptions options;
  options.width = 2;
  for (const CatalogResult& r : VerifyCatalog(options)) {
    EXPECT_TRUE(r.error.empty()) << r.name << ": " << r.error;
    EXPECT_EQ(r.verdict.passed, r.expect_pass) << r.name;
  }
}

TEST(CatalogTest, FilterSelectsByName) {
  VerifyOptions options;
  const auto results = VerifyCatalog(options, "overlap-");
  ASSERT_FALSE(results.empty());
  for (const CatalogResult& r : results) {
    EXPECT_NE(r.name.find("overlap-"), std::string::npos);
    EXPECT_TRUE(r.verdict.passed) << r.name;
  }
}

}  // namespace
}  // namespace skipshield
