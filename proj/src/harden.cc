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

#include <algorithm>
#include <map>

#include "skipshield/isa.h"

namespace skipshield {
namespace {

constexpr RegSet kArgRegs{Reg::kR0, Reg::kR1, Reg::kR2, Reg::kR3};

Operand R(Reg r) { return RegOperand{r, false}; }
Operand Imm(int64_t v) { return Immediate{v}; }

Instruction Make(Mnemonic m, std::vector<Operand> operands,
                 bool sets_flags = false) {
  Instruction inst;
  inst.mnemonic = m;
  inst.sets_flags = sets_flags;
  inst.operands = std::move(operands);
  return inst;
}

void Twice(Sequence& out, const Instruction& inst) {
  out.push_back(inst);
  out.push_back(inst);
}

int CountInstructions(const Sequence& seq) {
  return static_cast<int>(std::count_if(seq.begin(), seq.end(), [](const Item& i) {
    return std::holds_alternative<Instruction>(i);
  }));
}

// Every register named by an operand.
RegSet ReferencedRegs(const Instruction& inst) {
  RegSet regs;
  for (const Operand& op : inst.operands) {
    if (auto* r = std::get_if<RegOperand>(&op)) {
      regs.Insert(r->reg);
    } else if (auto* s = std::get_if<ShiftedRegister>(&op)) {
      regs.Insert(s->reg);
    } else if (auto* m = std::get_if<MemRef>(&op)) {
      regs.Insert(m->base);
      if (m->index) regs.Insert(*m->index);
    } else if (auto* l = std::get_if<RegisterList>(&op)) {
      regs |= l->regs;
    }
  }
  if (inst.mnemonic == Mnemonic::kPush || inst.mnemonic == Mnemonic::kPop) {
    regs.Insert(Reg::kSp);
  }
  return regs;
}

void RenameIn(Operand& op, Reg from, Reg to) {
  if (auto* r = std::get_if<RegOperand>(&op)) {
    if (r->reg == from) r->reg = to;
  } else if (auto* s = std::get_if<ShiftedRegister>(&op)) {
    if (s->reg == from) s->reg = to;
  } else if (auto* m = std::get_if<MemRef>(&op)) {
    if (m->base == from) m->base = to;
    if (m->index && *m->index == from) m->index = to;
  }
}

// Replaces `from` by `to` in source operand positions only.
Instruction RenameSources(Instruction inst, Reg from, Reg to) {
  size_t first_source = 1;
  switch (inst.mnemonic) {
    case Mnemonic::kLdmia:
    case Mnemonic::kLdmdb:
      RenameIn(inst.operands[0], from, to);
      return inst;
    case Mnemonic::kUmull:
    case Mnemonic::kUmlal:
      first_source = 2;
      break;
    default:
      break;
  }
  for (size_t k = first_source; k < inst.operands.size(); ++k) {
    RenameIn(inst.operands[k], from, to);
  }
  return inst;
}

// mov s,r x2 for each overlapping register, returning the renamed
// instruction. Consumes scratch from the front of `scratch`.
Instruction RouteOverlap(const Instruction& inst, std::span<const Reg> scratch,
                         Sequence& out) {
  const std::vector<Reg> overlap = OverlappingRegisters(inst).ToVector();
  if (scratch.size() < overlap.size()) {
    throw Error(ErrorCode::kNoScratchAvailable,
                "not enough scratch registers for overlapping operands",
                inst.line);
  }
  Instruction renamed = inst;
  for (size_t k = 0; k < overlap.size(); ++k) {
    Twice(out, Make(Mnemonic::kMov, {R(scratch[k]), R(overlap[k])}));
    renamed = RenameSources(renamed, overlap[k], scratch[k]);
  }
  return renamed;
}

Instruction AddImm(Reg rd, Reg rn, int64_t value) {
  if (value < 0) return Make(Mnemonic::kSub, {R(rd), R(rn), Imm(-value)});
  return Make(Mnemonic::kAdd, {R(rd), R(rn), Imm(value)});
}

Instruction WithCond(Instruction inst, Cond cond) {
  inst.cond = cond;
  return inst;
}

Instruction MakeIt(Cond first, std::string mask) {
  Instruction it;
  it.mnemonic = Mnemonic::kIt;
  it.it = ItSpec{first, std::move(mask)};
  return it;
}

HardeningRecord ItRecord(const Instruction& it, int length) {
  HardeningRecord record;
  record.line = it.line;
  record.original = EmitInstruction(it);
  record.classification = Classify(it, true);
  record.replacement_length = length;
  return record;
}

Instruction Stripped(const Instruction& slot) {
  Instruction inst = slot;
  inst.cond = Cond::kAl;
  return inst;
}

}  // namespace

std::string LabelAllocator::Next() {
  while (true) {
    std::string name = ".Lss" + std::to_string(counter_.fetch_add(1));
    if (!taken_.count(name)) return name;
  }
}

ScratchAllocation AllocateScratch(int need, const std::vector<Reg>& dead,
                                  RegSet exclude, bool allow_spill) {
  ScratchAllocation alloc;
  for (Reg r : dead) {
    if (static_cast<int>(alloc.regs.size()) == need) break;
    if (!exclude.Contains(r)) alloc.regs.push_back(r);
  }
  if (static_cast<int>(alloc.regs.size()) == need) return alloc;
  if (!allow_spill) {
    throw Error(ErrorCode::kNoScratchAvailable,
                "need " + std::to_string(need) + " scratch register(s), " +
                    std::to_string(alloc.regs.size()) + " dead");
  }
  static constexpr Reg kSpillOrder[] = {
      Reg::kR4, Reg::kR5, Reg::kR6, Reg::kR7, Reg::kR8, Reg::kR9,
      Reg::kR10, Reg::kR11, Reg::kR0, Reg::kR1, Reg::kR2, Reg::kR3,
      Reg::kR12, Reg::kLr};
  for (Reg r : kSpillOrder) {
    if (static_cast<int>(alloc.regs.size()) == need) break;
    if (exclude.Contains(r)) continue;
    if (std::find(alloc.regs.begin(), alloc.regs.end(), r) != alloc.regs.end()) {
      continue;
    }
    alloc.regs.push_back(r);
    alloc.spilled.push_back(r);
  }
  if (static_cast<int>(alloc.regs.size()) < need) {
    throw Error(ErrorCode::kNoScratchAvailable,
                "not enough registers to spill");
  }
  return alloc;
}

Sequence ReplaceIdempotent(const Instruction& inst) {
  Sequence out;
  Twice(out, inst);
  return out;
}

Sequence ReplaceOverlapping(const Instruction& inst,
                            std::span<const Reg> scratch) {
  Sequence out;
  Twice(out, RouteOverlap(inst, scratch, out));
  return out;
}

Sequence ReplaceStackOp(const Instruction& inst, Reg scratch) {
  const Mnemonic m = inst.mnemonic;
  const bool is_push_pop = m == Mnemonic::kPush || m == Mnemonic::kPop;
  const Reg base =
      is_push_pop ? Reg::kSp : std::get<RegOperand>(inst.operands[0]).reg;
  const RegisterList& list =
      std::get<RegisterList>(inst.operands[is_push_pop ? 0 : 1]);
  const int bytes = 4 * list.regs.Size();
  const bool decrement = m == Mnemonic::kPush || m == Mnemonic::kStmdb ||
                         m == Mnemonic::kLdmdb;

  Instruction access;
  if (is_push_pop && list.regs.Size() == 1) {
    // Single-register stm/ldm encodings are unpredictable; use str/ldr.
    const Reg r = list.regs.ToVector()[0];
    MemRef mem{Reg::kSp, std::nullopt, std::nullopt, 0, IndexMode::kOffset};
    if (m == Mnemonic::kPush) mem.imm = -4;
    access = Make(m == Mnemonic::kPush ? Mnemonic::kStr : Mnemonic::kLdr,
                  {R(r), mem});
  } else {
    Mnemonic plain = m;
    if (m == Mnemonic::kPush) plain = Mnemonic::kStmdb;
    if (m == Mnemonic::kPop) plain = Mnemonic::kLdmia;
    access = Make(plain, {R(base), list});
  }
  access.line = inst.line;

  Sequence out;
  Twice(out, access);
  Twice(out, AddImm(scratch, base, decrement ? -bytes : bytes));
  Twice(out, Make(Mnemonic::kMov, {R(base), R(scratch)}));
  return out;
}

Sequence ReplacePrePostIndexed(const Instruction& inst, Reg scratch) {
  const MemRef& mem = std::get<MemRef>(inst.operands[1]);
  Instruction update;
  if (mem.index) {
    Operand index = R(*mem.index);
    if (mem.index_lsl) {
      index = ShiftedRegister{*mem.index, ShiftKind::kLsl, mem.index_lsl};
    }
    update = Make(Mnemonic::kAdd, {R(scratch), R(mem.base), index});
  } else {
    update = AddImm(scratch, mem.base, mem.imm.value_or(0));
  }
  Instruction access = inst;
  MemRef plain{mem.base, std::nullopt, std::nullopt, 0, IndexMode::kOffset};
  Sequence out;
  if (mem.mode == IndexMode::kPreIndexed) {
    plain.base = scratch;
    access.operands[1] = plain;
    Twice(out, update);
    Twice(out, access);
  } else {
    access.operands[1] = plain;
    Twice(out, access);
    Twice(out, update);
  }
  Twice(out, Make(Mnemonic::kMov, {R(mem.base), R(scratch)}));
  return out;
}

Sequence ReplaceUmlal(const Instruction& inst,
                      std::span<const Reg, 4> scratch) {
  const Reg lo = inst.RegAt(0), hi = inst.RegAt(1);
  const Reg rn = inst.RegAt(2), rm = inst.RegAt(3);
  const Reg rt = scratch[0], rx = scratch[1], ry = scratch[2], rz = scratch[3];
  Sequence out;
  Twice(out, Make(Mnemonic::kMrs, {R(rt), SpecialReg{Psr::kApsr}}));
  Twice(out, Make(Mnemonic::kUmull, {R(rx), R(ry), R(rn), R(rm)}));
  Twice(out, Make(Mnemonic::kAdd, {R(rz), R(rx), R(lo)}, true));
  Twice(out, Make(Mnemonic::kAdc, {R(rx), R(ry), R(hi)}));
  Twice(out, Make(Mnemonic::kMov, {R(lo), R(rz)}));
  Twice(out, Make(Mnemonic::kMov, {R(hi), R(rx)}));
  Twice(out, Make(Mnemonic::kMsr, {SpecialReg{Psr::kApsrNzcvq}, R(rt)}));
  return out;
}

Sequence ReplaceRrx(const Instruction& inst, std::span<const Reg> scratch) {
  const int index = RrxOperandIndex(inst);
  if (index < 0 || scratch.empty()) {
    throw Error(ErrorCode::kHardening, "rrx recipe needs an rrx operand",
                inst.line);
  }
  const Reg src = std::get<ShiftedRegister>(inst.operands[index]).reg;
  Sequence out;
  Twice(out, Make(Mnemonic::kRrx, {R(scratch[0]), R(src)}));
  Instruction split = inst;
  split.operands[index] = R(scratch[0]);
  Twice(out, RouteOverlap(split, scratch.subspan(1), out));
  return out;
}

Sequence ReplaceBl(const Instruction& inst, Reg scratch,
                   const std::string& return_label) {
  Sequence out;
  Twice(out, Make(Mnemonic::kAdr, {R(scratch), LabelRef{return_label}}));
  Twice(out, Make(Mnemonic::kAdd, {R(Reg::kLr), R(scratch), Imm(1)}));
  Twice(out, Make(Mnemonic::kB, {LabelRef{*inst.Target()}}));
  out.push_back(Label{return_label, 0});
  return out;
}

Sequence ReplaceFlagsRw(const Instruction& inst, std::span<const Reg> scratch) {
  if (scratch.empty()) {
    throw Error(ErrorCode::kNoScratchAvailable,
                "flags-read-write recipe needs a scratch register", inst.line);
  }
  Sequence out;
  const Instruction routed = RouteOverlap(inst, scratch.subspan(1), out);
  const Reg save = scratch[0];
  Twice(out, Make(Mnemonic::kMrs, {R(save), SpecialReg{Psr::kApsr}}));
  out.push_back(routed);
  Twice(out, Make(Mnemonic::kMsr, {SpecialReg{Psr::kApsrNzcvq}, R(save)}));
  out.push_back(routed);
  return out;
}

int ScratchNeeded(const Instruction& inst, Recipe recipe) {
  switch (recipe) {
    case Recipe::kDestOverlapsSource:
      return OverlappingRegisters(inst).Size();
    case Recipe::kPrePostIndexed:
    case Recipe::kStackManipulation:
    case Recipe::kSubroutineCall:
      return 1;
    case Recipe::kUmlalSplit:
      return 4;
    case Recipe::kRrxFlagSplit: {
      Instruction split = inst;
      split.operands[RrxOperandIndex(inst)] = R(Reg::kPc);
      return 1 + OverlappingRegisters(split).Size();
    }
    case Recipe::kFlagsReadWrite:
      return 1 + OverlappingRegisters(inst).Size();
    default:
      return 0;
  }
}

Replacement HardenInstruction(const Instruction& inst,
                              const RegAndFlags& live_in,
                              const RegAndFlags& live_out,
                              const HardeningPolicy& policy,
                              LabelAllocator& labels) {
  const Classification cls = Classify(inst, live_out.flags);
  if (cls.cls == InstrClass::kRejected) {
    const Effects e = EffectsOf(inst);
    const bool flags = (e.flags_read & e.flags_may_write) != 0 &&
                       live_out.flags;
    throw Error(flags ? ErrorCode::kFlagsAliveAfter : ErrorCode::kHardening,
                EmitInstruction(inst) + ": " + cls.reason, inst.line);
  }
  if (cls.recipe == Recipe::kItBlock) {
    throw Error(ErrorCode::kHardening,
                "conditional instruction outside a whole it block", inst.line);
  }

  const int need = ScratchNeeded(inst, cls.recipe);
  const RegSet referenced = ReferencedRegs(inst);
  std::vector<Reg> dead;
  RegSet exclude;
  if (cls.recipe == Recipe::kSubroutineCall) {
    // Only the state on entry matters: the callee clobbers the rest.
    dead = DeadRegisters(live_in);
    exclude = kArgRegs | RegSet{Reg::kLr};
  } else {
    dead = DeadRegisters({live_in.regs | live_out.regs, false});
    exclude = referenced;
  }
  const bool touches_sp = referenced.Contains(Reg::kSp) ||
                          cls.recipe == Recipe::kStackManipulation ||
                          cls.recipe == Recipe::kSubroutineCall;
  ScratchAllocation alloc;
  try {
    alloc = AllocateScratch(need, dead, exclude,
                            policy.allow_stack_spill && !touches_sp);
  } catch (const Error& e) {
    throw Error(e.code(), EmitInstruction(inst) + ": " + e.what(), inst.line);
  }

  Sequence core;
  switch (cls.recipe) {
    case Recipe::kDuplicate:
      core = ReplaceIdempotent(inst);
      break;
    case Recipe::kDestOverlapsSource:
      core = ReplaceOverlapping(inst, alloc.regs);
      break;
    case Recipe::kPrePostIndexed:
      core = ReplacePrePostIndexed(inst, alloc.regs[0]);
      break;
    case Recipe::kStackManipulation:
      core = ReplaceStackOp(inst, alloc.regs[0]);
      break;
    case Recipe::kUmlalSplit:
      core = ReplaceUmlal(inst, std::span<const Reg, 4>(alloc.regs.data(), 4));
      break;
    case Recipe::kRrxFlagSplit:
      core = ReplaceRrx(inst, alloc.regs);
      break;
    case Recipe::kSubroutineCall:
      core = ReplaceBl(inst, alloc.regs[0], labels.Next());
      break;
    case Recipe::kFlagsReadWrite:
      core = ReplaceFlagsRw(inst, alloc.regs);
      break;
    default:
      throw Error(ErrorCode::kHardening, "no recipe", inst.line);
  }

  Replacement result;
  for (size_t k = 0; k < alloc.spilled.size(); ++k) {
    const int offset = -4 * static_cast<int>(k + 1);
    MemRef slot{Reg::kSp, offset, std::nullopt, 0, IndexMode::kOffset};
    Twice(result.items, Make(Mnemonic::kStr, {R(alloc.spilled[k]), slot}));
  }
  result.items.insert(result.items.end(), core.begin(), core.end());
  for (size_t k = 0; k < alloc.spilled.size(); ++k) {
    const int offset = -4 * static_cast<int>(k + 1);
    MemRef slot{Reg::kSp, offset, std::nullopt, 0, IndexMode::kOffset};
    Twice(result.items, Make(Mnemonic::kLdr, {R(alloc.spilled[k]), slot}));
  }
  for (Item& item : result.items) {
    if (auto* i = std::get_if<Instruction>(&item); i && i->line == 0) {
      i->line = inst.line;
    }
  }

  HardeningRecord& record = result.record;
  record.line = inst.line;
  record.original = EmitInstruction(inst);
  record.classification = cls;
  record.replacement_length = CountInstructions(result.items);
  record.scratch = alloc.regs;
  record.spilled = !alloc.spilled.empty();
  return result;
}

namespace {

Sequence ExpandBranch(const ItBlock& block, const HardeningPolicy& policy,
                      LabelAllocator& labels,
                      std::vector<HardeningRecord>* records) {
  const ItSpec& spec = *block.it.it;
  const int slots = static_cast<int>(block.slots.size());
  for (int s = 0; s + 1 < slots; ++s) {
    if (EffectsOf(block.slots[s]).flags_may_write) {
      throw Error(ErrorCode::kHardening,
                  "flag-setting instruction before the last slot of an it "
                  "block",
                  block.slots[s].line);
    }
  }
  std::vector<int> then_arm, else_arm;
  for (int s = 0; s < slots; ++s) {
    (spec.SlotCond(s) == spec.first ? then_arm : else_arm).push_back(s);
  }
  const std::string else_label = else_arm.empty() ? "" : labels.Next();
  const std::string cont_label = labels.Next();

  std::vector<HardeningRecord> slot_records;
  auto arm = [&](const std::vector<int>& arm_slots, Sequence& out) {
    for (int s : arm_slots) {
      Replacement r = HardenInstruction(Stripped(block.slots[s]),
                                        block.live_in[s], block.live_out[s],
                                        policy, labels);
      r.record.original = EmitInstruction(block.slots[s]);
      out.insert(out.end(), r.items.begin(), r.items.end());
      slot_records.push_back(std::move(r.record));
    }
  };

  Sequence out;
  Instruction skip_then = Make(
      Mnemonic::kB, {LabelRef{else_arm.empty() ? cont_label : else_label}});
  skip_then.cond = Invert(spec.first);
  skip_then.line = block.it.line;
  Twice(out, skip_then);
  arm(then_arm, out);
  if (!else_arm.empty()) {
    Instruction to_cont = Make(Mnemonic::kB, {LabelRef{cont_label}});
    to_cont.line = block.it.line;
    Twice(out, to_cont);
    out.push_back(Label{else_label, 0});
    arm(else_arm, out);
  }
  out.push_back(Label{cont_label, 0});

  if (records) {
    records->push_back(ItRecord(block.it, else_arm.empty() ? 2 : 4));
    records->insert(records->end(), slot_records.begin(), slot_records.end());
  }
  return out;
}

}  // namespace

Sequence ExpandItBlockDuplicated(const ItBlock& block,
                                 const HardeningPolicy& policy,
                                 LabelAllocator& labels,
                                 std::vector<HardeningRecord>* records) {
  const ItSpec& spec = *block.it.it;
  std::vector<Instruction> body;
  std::vector<HardeningRecord> slot_records;
  for (size_t s = 0; s < block.slots.size(); ++s) {
    Replacement r = HardenInstruction(Stripped(block.slots[s]),
                                      block.live_in[s], block.live_out[s],
                                      policy, labels);
    for (const Item& item : r.items) {
      const auto* inst = std::get_if<Instruction>(&item);
      if (inst == nullptr || IsBranch(inst->mnemonic) ||
          inst->mnemonic == Mnemonic::kIt ||
          EffectsOf(*inst).flags_may_write != 0) {
        throw Error(ErrorCode::kItBlockTooLong,
                    "replacement of '" + EmitInstruction(block.slots[s]) +
                        "' cannot be covered by it instructions",
                    block.slots[s].line);
      }
      body.push_back(WithCond(*inst, spec.SlotCond(static_cast<int>(s))));
    }
    r.record.original = EmitInstruction(block.slots[s]);
    slot_records.push_back(std::move(r.record));
  }

  // Groups of up to three instructions, each behind an it covering the
  // group plus the second it, and that second it covering the group alone.
  Sequence out;
  int groups = 0;
  for (size_t g = 0; g < body.size(); g += 3) {
    const size_t end = std::min(body.size(), g + 3);
    const Cond first = body[g].cond;
    std::string letters;
    for (size_t k = g + 1; k < end; ++k) {
      letters += body[k].cond == first ? 't' : 'e';
    }
    Instruction outer = MakeIt(first, "t" + letters);
    Instruction inner = MakeIt(first, letters);
    outer.line = inner.line = block.it.line;
    out.push_back(outer);
    out.push_back(inner);
    for (size_t k = g; k < end; ++k) out.push_back(body[k]);
    ++groups;
  }
  if (records) {
    records->push_back(ItRecord(block.it, 2 * groups));
    records->insert(records->end(), slot_records.begin(), slot_records.end());
  }
  return out;
}

Sequence ExpandItBlock(const ItBlock& block, const HardeningPolicy& policy,
                       LabelAllocator& labels,
                       std::vector<HardeningRecord>* records) {
  if (policy.it_strategy == ItStrategy::kDuplicatedIt) {
    try {
      return ExpandItBlockDuplicated(block, policy, labels, records);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kItBlockTooLong) throw;
    }
  }
  return ExpandBranch(block, policy, labels, records);
}

Program HardenProgram(const Program& program, const LivenessMap& liveness,
                      const HardeningPolicy& policy, HardeningReport* report) {
  // Instruction ordinals of every label.
  std::map<std::string, int> label_ordinal;
  std::set<std::string> names;
  int count = 0;
  for (const Item& item : program.items) {
    if (auto* label = std::get_if<Label>(&item)) {
      label_ordinal[label->name] = count;
      names.insert(label->name);
    } else if (std::holds_alternative<Instruction>(item)) {
      ++count;
    }
  }

  std::vector<bool> in_scope(count, policy.ranges.empty());
  for (const ScopeRange& range : policy.ranges) {
    auto begin = label_ordinal.find(range.begin);
    auto end = label_ordinal.find(range.end);
    if (begin == label_ordinal.end() || end == label_ordinal.end()) {
      throw Error(ErrorCode::kConfig, "scope refers to unknown label '" +
                                          (begin == label_ordinal.end()
                                               ? range.begin
                                               : range.end) +
                                          "'");
    }
    if (begin->second > end->second) {
      throw Error(ErrorCode::kConfig, "scope " + range.begin + ":" +
                                          range.end + " is reversed");
    }
    for (int k = begin->second; k < end->second; ++k) in_scope[k] = true;
  }

  std::vector<const Instruction*> insts = program.Instructions();
  for (int k = 0; k < count; ++k) {
    if (insts[k]->mnemonic != Mnemonic::kIt) continue;
    const int slots = insts[k]->it->SlotCount();
    for (int s = 1; s <= slots; ++s) {
      if (in_scope[k + s] != in_scope[k]) {
        throw Error(ErrorCode::kConfig, "scope splits an it block",
                    insts[k]->line);
      }
    }
  }

  LabelAllocator labels(names);
  HardeningReport local;
  Program out;
  int k = 0;
  for (size_t i = 0; i < program.items.size(); ++i) {
    const Item& item = program.items[i];
    const auto* inst = std::get_if<Instruction>(&item);
    if (inst == nullptr) {
      out.items.push_back(item);
      continue;
    }
    if (!in_scope[k]) {
      out.items.push_back(item);
      ++k;
      continue;
    }
    if (inst->mnemonic == Mnemonic::kIt) {
      ItBlock block;
      block.it = *inst;
      const int slots = inst->it->SlotCount();
      for (int s = 0; s < slots; ++s) {
        ++i;
        block.slots.push_back(std::get<Instruction>(program.items[i]));
        block.live_in.push_back(liveness.Before(k + 1 + s));
        block.live_out.push_back(liveness.After(k + 1 + s));
      }
      Sequence seq = ExpandItBlock(block, policy, labels, &local.records);
      out.items.insert(out.items.end(), seq.begin(), seq.end());
      local.original_in_scope += 1 + slots;
      local.hardened_in_scope += CountInstructions(seq);
      k += 1 + slots;
      continue;
    }
    Replacement r = HardenInstruction(*inst, liveness.Before(k),
                                      liveness.After(k), policy, labels);
    out.items.insert(out.items.end(), r.items.begin(), r.items.end());
    local.original_in_scope += 1;
    local.hardened_in_scope += r.record.replacement_length;
    local.records.push_back(std::move(r.record));
    ++k;
  }
  local.original_total = count;
  local.hardened_total = static_cast<int>(out.InstructionCount());
  if (report) *report = std::move(local);
  return out;
}

Program HardenProgram(const Program& program, const HardeningPolicy& policy,
                      HardeningReport* report) {
  const Cfg cfg = BuildCfg(program, policy.liveness);
  const LivenessMap liveness = ComputeLiveness(program, cfg, policy.liveness);
  return HardenProgram(program, liveness, policy, report);
}

}  // namespace skipshield
