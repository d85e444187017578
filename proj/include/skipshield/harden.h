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
// Instruction-by-instruction rewriting into skip-tolerant replacement
// sequences. The Replace* functions are the individual recipes; the
// HardenProgram driver picks scratch registers from the liveness map.

#ifndef SKIPSHIELD_HARDEN_H_
#define SKIPSHIELD_HARDEN_H_

#include <atomic>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "skipshield/asm.h"
#include "skipshield/classify.h"
#include "skipshield/liveness.h"

namespace skipshield {

enum class ItStrategy { kBranchExpansion, kDuplicatedIt };

// Instructions from label `begin` up to, not including, label `end`.
struct ScopeRange {
  std::string begin;
  std::string end;
};

struct HardeningPolicy {
  std::vector<ScopeRange> ranges;  // empty: the whole program
  ItStrategy it_strategy = ItStrategy::kBranchExpansion;
  bool allow_stack_spill = true;
  LivenessOptions liveness;
};

struct HardeningRecord {
  int line = 0;
  std::string original;
  Classification classification;
  // Instructions emitted for this original instruction, spill code included.
  // For an `it`, the structural instructions of the expansion (branches or
  // it instructions); its slots have records of their own.
  int replacement_length = 0;
  std::vector<Reg> scratch;
  bool spilled = false;
};

struct HardeningReport {
  std::vector<HardeningRecord> records;
  int original_in_scope = 0;
  int hardened_in_scope = 0;
  int original_total = 0;
  int hardened_total = 0;
};

// Hands out `.Lss<n>` names that do not collide with `taken`. Safe to share
// between threads.
class LabelAllocator {
 public:
  explicit LabelAllocator(std::set<std::string> taken = {})
      : taken_(std::move(taken)) {}
  std::string Next();

 private:
  std::set<std::string> taken_;
  std::atomic<int> counter_{0};
};

// Scratch registers for one replacement. Registers in `spilled` are live and
// are saved below sp around the replacement.
struct ScratchAllocation {
  std::vector<Reg> regs;
  std::vector<Reg> spilled;
};

// First `need` entries of `dead` not in `exclude`; when short, live
// registers are taken for spilling (r4-r11, r0-r3, r12, lr) if allowed.
// Throws Error(kNoScratchAvailable).
ScratchAllocation AllocateScratch(int need, const std::vector<Reg>& dead,
                                  RegSet exclude, bool allow_spill);

// [i, i].
Sequence ReplaceIdempotent(const Instruction& inst);
// One scratch per overlapping source register: mov s,r x2 for each, then the
// instruction reading s instead of r, twice.
Sequence ReplaceOverlapping(const Instruction& inst,
                            std::span<const Reg> scratch);
// push/pop and writeback ldm/stm: access x2, address update into scratch x2,
// base := scratch x2.
Sequence ReplaceStackOp(const Instruction& inst, Reg scratch);
// Writeback ldr/str: the address update and the access are separated.
Sequence ReplacePrePostIndexed(const Instruction& inst, Reg scratch);
// umlal rlo,rhi,rn,rm with scratch {rt, rx, ry, rz}; 14 instructions.
Sequence ReplaceUmlal(const Instruction& inst, std::span<const Reg, 4> scratch);
// Flag-setting arithmetic with an rrx operand: rrx s,rm x2; op with s x2.
// Extra scratch registers route any remaining overlap.
Sequence ReplaceRrx(const Instruction& inst, std::span<const Reg> scratch);
// adr s,L x2; add lr,s,#1 x2; b target x2; L:
Sequence ReplaceBl(const Instruction& inst, Reg scratch,
                   const std::string& return_label);
// mrs s,apsr x2; i; msr apsr,s x2; i. Extra scratch registers route overlap
// (mov x2 each, in front).
Sequence ReplaceFlagsRw(const Instruction& inst, std::span<const Reg> scratch);

// Scratch registers a recipe needs for `inst`.
int ScratchNeeded(const Instruction& inst, Recipe recipe);

// Hardened replacement for one non-it instruction, spill code included.
struct Replacement {
  Sequence items;
  HardeningRecord record;
};

// `live_in`/`live_out` bracket the instruction.
Replacement HardenInstruction(const Instruction& inst,
                              const RegAndFlags& live_in,
                              const RegAndFlags& live_out,
                              const HardeningPolicy& policy,
                              LabelAllocator& labels);

// An it instruction and its slots, with the liveness around each slot.
struct ItBlock {
  Instruction it;
  std::vector<Instruction> slots;
  std::vector<RegAndFlags> live_in;
  std::vector<RegAndFlags> live_out;
};

// Under kDuplicatedIt, falls back to branch expansion when the replacements
// cannot be covered by it instructions. Appends records to `records`.
Sequence ExpandItBlock(const ItBlock& block, const HardeningPolicy& policy,
                       LabelAllocator& labels,
                       std::vector<HardeningRecord>* records);

// Duplicated-it form only; throws Error(kItBlockTooLong).
Sequence ExpandItBlockDuplicated(const ItBlock& block,
                                 const HardeningPolicy& policy,
                                 LabelAllocator& labels,
                                 std::vector<HardeningRecord>* records);

// Throws Error(kHardening / kFlagsAliveAfter / kNoScratchAvailable /
// kUnresolvedLabel / kIndirectBranch).
Program HardenProgram(const Program& program, const HardeningPolicy& policy,
                      HardeningReport* report = nullptr);
// Same, with a precomputed liveness map (policy.liveness is then unused).
Program HardenProgram(const Program& program, const LivenessMap& liveness,
                      const HardeningPolicy& policy,
                      HardeningReport* report = nullptr);

}  // namespace skipshield

#endif  // SKIPSHIELD_HARDEN_H_
