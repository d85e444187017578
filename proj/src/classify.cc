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

#include "skipshield/classify.h"

#include "skipshield/isa.h"

namespace skipshield {
namespace {

Classification Idempotent() { return {InstrClass::kIdempotent, Recipe::kDuplicate, ""}; }

Classification Separable(Recipe r) { return {InstrClass::kSeparable, r, ""}; }

Classification Specific(Recipe r) { return {InstrClass::kSpecific, r, ""}; }

Classification Rejected(std::string reason) {
  return {InstrClass::kRejected, Recipe::kNone, std::move(reason)};
}

bool HasWriteback(const Instruction& inst) {
  if (auto* mem = inst.Get<MemRef>(1)) return mem->mode != IndexMode::kOffset;
  if (IsLoadStoreMultiple(inst.mnemonic) && inst.IsReg(0)) {
    return std::get<RegOperand>(inst.operands[0]).writeback;
  }
  return false;
}

}  // namespace

std::string_view ClassName(InstrClass c) {
  switch (c) {
    case InstrClass::kIdempotent: return "idempotent";
    case InstrClass::kSeparable: return "separable";
    case InstrClass::kSpecific: return "specific";
    case InstrClass::kRejected: return "rejected";
  }
  return "?";
}

std::string_view RecipeName(Recipe r) {
  switch (r) {
    case Recipe::kNone: return "none";
    case Recipe::kDuplicate: return "duplicate";
    case Recipe::kDestOverlapsSource: return "dest-overlaps-source";
    case Recipe::kPrePostIndexed: return "pre/post-indexed-address";
    case Recipe::kStackManipulation: return "stack-manipulation";
    case Recipe::kUmlalSplit: return "umlal-split";
    case Recipe::kRrxFlagSplit: return "rrx-flag-split";
    case Recipe::kSubroutineCall: return "subroutine-call";
    case Recipe::kItBlock: return "it-block";
    case Recipe::kFlagsReadWrite: return "flags-read-write";
  }
  return "?";
}

RegSet OverlappingRegisters(const Instruction& inst) {
  const Effects e = EffectsOf(inst);
  return (e.defs & e.uses) - RegSet{Reg::kPc};
}

Classification Classify(const Instruction& inst, bool flags_live_after) {
  const Mnemonic m = inst.mnemonic;
  if (m == Mnemonic::kIt) return Specific(Recipe::kItBlock);
  if (inst.cond != Cond::kAl && m != Mnemonic::kB) {
    return Specific(Recipe::kItBlock);
  }
  if (m == Mnemonic::kBl) return Specific(Recipe::kSubroutineCall);
  if (m == Mnemonic::kB) return Idempotent();
  if (m == Mnemonic::kBx) {
    if (inst.RegAt(0) == Reg::kLr) return Idempotent();
    return Rejected("indirect branch has no modeled target");
  }

  const Effects e = EffectsOf(inst);
  if (e.defs.Contains(Reg::kPc)) {
    return Rejected("instruction writes pc");
  }
  if (e.uses.Contains(Reg::kPc)) {
    return Rejected("pc-relative operand depends on the instruction address");
  }

  const bool flags_rw = (e.flags_read & e.flags_may_write) != 0;
  if (flags_rw) {
    const bool arithmetic_rrx = IsArithmetic(m) && m != Mnemonic::kAdc &&
                                m != Mnemonic::kSbc &&
                                RrxOperandIndex(inst) >= 0;
    if (arithmetic_rrx) return Separable(Recipe::kRrxFlagSplit);
    if (flags_live_after) {
      return Rejected("flags alive after flags-read-write instruction");
    }
    return Specific(Recipe::kFlagsReadWrite);
  }

  if (m == Mnemonic::kPush || m == Mnemonic::kPop) {
    return Separable(Recipe::kStackManipulation);
  }
  if (HasWriteback(inst)) {
    if (IsLoadStoreMultiple(m)) return Separable(Recipe::kStackManipulation);
    return Separable(Recipe::kPrePostIndexed);
  }
  if (m == Mnemonic::kUmlal) return Separable(Recipe::kUmlalSplit);
  if (!OverlappingRegisters(inst).Empty()) {
    return Separable(Recipe::kDestOverlapsSource);
  }
  return Idempotent();
}

}  // namespace skipshield
