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
//
// Exhaustive skip-fault equivalence checking of an original sequence against
// its replacement.
//
// Every initial state is enumerated: the registers read by either side, the
// flags read by either side, and one W-bit input per distinct memory address
// loaded without being stored first. From each initial state the original
// runs fault-free (P1: it terminates) and the replacement runs once without
// a fault and once per skipped static instruction (P2: it terminates). The
// final states must agree on the observables (P3).
//
// Registers and flags written but never read are not enumerated. Their
// initial value is unknown, so one side writing them and the other not is a
// mismatch; the counterexample then picks an initial value that differs from
// the written one.

#ifndef SKIPSHIELD_VERIFIER_H_
#define SKIPSHIELD_VERIFIER_H_

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skipshield/asm.h"
#include "skipshield/base.h"

namespace skipshield {

enum class FlagMode {
  kStrict,   // all five flags equal in every scenario
  kRelaxed,  // flags equal in the fault-free scenario only
  kIgnore,
};

std::string_view FlagModeName(FlagMode mode);

struct EquivalenceSpec {
  // Default: every register referenced by either side, minus scratch and pc.
  std::optional<RegSet> registers_of_interest;
  // Dead registers the replacement may use. They start undefined; reading
  // one before writing it fails P3.
  RegSet scratch;
  FlagMode compare_flags = FlagMode::kStrict;
  // Replacement store count must be at least the original's.
  bool require_store_count = false;
  // Both sides must make exactly this many calls.
  std::optional<uint32_t> require_call_count;
  bool compare_memory = true;
  // Memory below sp is dead: stack cells are not compared.
  bool compare_stack_memory = true;
  // Branch targets that model a function returning through lr.
  std::set<std::string> function_labels;
};

enum class Property { kNone, kP1, kP2, kP3 };
std::string_view PropertyName(Property p);

struct Mismatch {
  std::string observable;  // "r1", "flag C", "exit", "store-count", ...
  uint32_t expected = 0;   // original
  uint32_t actual = 0;     // replacement
  bool operator==(const Mismatch&) const = default;
};

struct Counterexample {
  std::array<uint32_t, kNumRegs> regs{};
  uint8_t flags = 0;
  // Inputs for memory loads, in binding order.
  std::vector<uint32_t> loads;
  std::optional<int> skip;  // static instruction index in the replacement
  Mismatch mismatch;
};

struct Verdict {
  bool passed = true;
  Property property_failed = Property::kNone;
  std::optional<Counterexample> counterexample;
  uint64_t states_explored = 0;  // initial states
  int scenarios = 0;
  bool exhaustive = true;
  int symbolic_loads = 0;
  // Store counts seen: original, replacement minimum and maximum.
  uint32_t original_stores = 0;
  uint32_t min_replacement_stores = 0;
  uint32_t max_replacement_stores = 0;
  double seconds = 0;
};

struct VerifyOptions {
  int width = 4;
  // Enumeration guard: at most 2^max_log2_states initial states.
  int max_log2_states = 28;
  // When positive, an over-large space is sampled with this many
  // pseudo-random initial states instead of failing.
  uint64_t sample_states = 0;
  uint64_t seed = 0x5eed;
  int threads = 1;
};

// No fault, then one skip per instruction of `replacement`.
std::vector<std::optional<int>> EnumerateFaultScenarios(
    const Sequence& replacement);

// Throws Error(kStateSpaceTooLarge) and Error(kUnmodeledInstruction).
Verdict CheckEquivalence(const Sequence& original, const Sequence& replacement,
                         const EquivalenceSpec& spec,
                         const VerifyOptions& options = {});
Verdict CheckEquivalence(const Instruction& original,
                         const Sequence& replacement,
                         const EquivalenceSpec& spec,
                         const VerifyOptions& options = {});

// Re-runs a counterexample and returns the first divergent observable, if
// any.
std::optional<Mismatch> ReplayCounterexample(const Sequence& original,
                                             const Sequence& replacement,
                                             const EquivalenceSpec& spec,
                                             int width,
                                             const Counterexample& cx);

struct CatalogEntry {
  std::string name;
  std::string recipe;
  Sequence original;
  Sequence replacement;
  EquivalenceSpec spec;
  bool expect_pass = true;
};

// One representative per recipe and operand pattern.
std::vector<CatalogEntry> BuiltinCatalog();

struct CatalogResult {
  std::string name;
  std::string recipe;
  bool expect_pass = true;
  Verdict verdict;
  std::string error;  // set when the check threw
};

// Runs every entry whose name or recipe contains `filter` (all when empty).
std::vector<CatalogResult> VerifyCatalog(const VerifyOptions& options,
                                         const std::string& filter = "");

}  // namespace skipshield

#endif  // SKIPSHIELD_VERIFIER_H_
