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

#include "skipshield/isa.h"

namespace skipshield {
namespace {

void AddSourceOperand(const Operand& op, Effects& e) {
  if (auto* r = std::get_if<RegOperand>(&op)) {
    e.uses.Insert(r->reg);
  } else if (auto* s = std::get_if<ShiftedRegister>(&op)) {
    e.uses.Insert(s->reg);
    if (s->kind == ShiftKind::kRrx) e.flags_read |= kFlagC;
  } else if (auto* m = std::get_if<MemRef>(&op)) {
    e.uses.Insert(m->base);
    if (m->index) e.uses.Insert(*m->index);
  }
}

// Carry produced by the shifter for a flexible second operand.
bool ShifterWritesCarry(const Operand& op) {
  auto* s = std::get_if<ShiftedRegister>(&op);
  if (!s) return false;
  return !(s->kind == ShiftKind::kLsl && s->amount == 0);
}

void AddMemWriteback(const MemRef& m, Effects& e) {
  if (m.mode != IndexMode::kOffset) e.defs.Insert(m.base);
}

}  // namespace

RegAndFlags DefaultCallClobbers() {
  return {RegSet{Reg::kR0, Reg::kR1, Reg::kR2, Reg::kR3, Reg::kR12, Reg::kLr},
          true};
}

bool IsLoad(Mnemonic m) {
  return m == Mnemonic::kLdr || m == Mnemonic::kLdrb || m == Mnemonic::kLdrh;
}

bool IsStore(Mnemonic m) {
  return m == Mnemonic::kStr || m == Mnemonic::kStrb || m == Mnemonic::kStrh;
}

bool IsLoadStoreMultiple(Mnemonic m) {
  return m == Mnemonic::kLdmia || m == Mnemonic::kLdmdb ||
         m == Mnemonic::kStmia || m == Mnemonic::kStmdb ||
         m == Mnemonic::kPush || m == Mnemonic::kPop;
}

bool IsBranch(Mnemonic m) {
  return m == Mnemonic::kB || m == Mnemonic::kBl || m == Mnemonic::kBx;
}

bool IsLogical(Mnemonic m) {
  switch (m) {
    case Mnemonic::kAnd:
    case Mnemonic::kOrr:
    case Mnemonic::kEor:
    case Mnemonic::kBic:
    case Mnemonic::kMov:
    case Mnemonic::kMvn:
    case Mnemonic::kTst:
    case Mnemonic::kTeq:
      return true;
    default:
      return false;
  }
}

bool IsArithmetic(Mnemonic m) {
  switch (m) {
    case Mnemonic::kAdd:
    case Mnemonic::kSub:
    case Mnemonic::kRsb:
    case Mnemonic::kAdc:
    case Mnemonic::kSbc:
    case Mnemonic::kCmp:
    case Mnemonic::kCmn:
      return true;
    default:
      return false;
  }
}

Effects EffectsOf(const Instruction& inst) {
  Effects e;
  const auto& ops = inst.operands;
  switch (inst.mnemonic) {
    case Mnemonic::kMov:
    case Mnemonic::kMvn:
      e.defs.Insert(inst.RegAt(0));
      AddSourceOperand(ops[1], e);
      if (inst.sets_flags) {
        e.flags_must_write = kFlagN | kFlagZ;
        if (ShifterWritesCarry(ops[1])) e.flags_must_write |= kFlagC;
      }
      break;
    case Mnemonic::kAnd:
    case Mnemonic::kOrr:
    case Mnemonic::kEor:
    case Mnemonic::kBic:
      e.defs.Insert(inst.RegAt(0));
      AddSourceOperand(ops[1], e);
      AddSourceOperand(ops[2], e);
      if (inst.sets_flags) {
        e.flags_must_write = kFlagN | kFlagZ;
        if (ShifterWritesCarry(ops[2])) e.flags_must_write |= kFlagC;
      }
      break;
    case Mnemonic::kTst:
    case Mnemonic::kTeq:
      AddSourceOperand(ops[0], e);
      AddSourceOperand(ops[1], e);
      e.flags_must_write = kFlagN | kFlagZ;
      if (ShifterWritesCarry(ops[1])) e.flags_must_write |= kFlagC;
      break;
    case Mnemonic::kAdd:
    case Mnemonic::kSub:
    case Mnemonic::kRsb:
    case Mnemonic::kAdc:
    case Mnemonic::kSbc:
      e.defs.Insert(inst.RegAt(0));
      AddSourceOperand(ops[1], e);
      AddSourceOperand(ops[2], e);
      if (inst.mnemonic == Mnemonic::kAdc || inst.mnemonic == Mnemonic::kSbc) {
        e.flags_read |= kFlagC;
      }
      if (inst.sets_flags) e.flags_must_write = kNzcvFlags;
      break;
    case Mnemonic::kCmp:
    case Mnemonic::kCmn:
      AddSourceOperand(ops[0], e);
      AddSourceOperand(ops[1], e);
      e.flags_must_write = kNzcvFlags;
      break;
    case Mnemonic::kMul:
      e.defs.Insert(inst.RegAt(0));
      AddSourceOperand(ops[1], e);
      AddSourceOperand(ops[2], e);
      if (inst.sets_flags) e.flags_must_write = kFlagN | kFlagZ;
      break;
    case Mnemonic::kUmull:
    case Mnemonic::kUmlal:
      e.defs.Insert(inst.RegAt(0));
      e.defs.Insert(inst.RegAt(1));
      if (inst.mnemonic == Mnemonic::kUmlal) {
        e.uses.Insert(inst.RegAt(0));
        e.uses.Insert(inst.RegAt(1));
      }
      e.uses.Insert(inst.RegAt(2));
      e.uses.Insert(inst.RegAt(3));
      break;
    case Mnemonic::kLsl:
    case Mnemonic::kLsr:
    case Mnemonic::kAsr:
    case Mnemonic::kRor:
      e.defs.Insert(inst.RegAt(0));
      AddSourceOperand(ops[1], e);
      AddSourceOperand(ops[2], e);
      if (inst.sets_flags) {
        e.flags_must_write = kFlagN | kFlagZ;
        if (auto* imm = inst.Get<Immediate>(2)) {
          if (!(inst.mnemonic == Mnemonic::kLsl && imm->value == 0)) {
            e.flags_must_write |= kFlagC;
          }
        } else {
          e.flags_may_write |= kFlagC;  // a zero shift leaves C alone
        }
      }
      break;
    case Mnemonic::kRrx:
      e.defs.Insert(inst.RegAt(0));
      e.uses.Insert(inst.RegAt(1));
      e.flags_read |= kFlagC;
      if (inst.sets_flags) e.flags_must_write = kFlagN | kFlagZ | kFlagC;
      break;
    case Mnemonic::kLdr:
    case Mnemonic::kLdrb:
    case Mnemonic::kLdrh: {
      const auto& m = std::get<MemRef>(ops[1]);
      e.defs.Insert(inst.RegAt(0));
      AddSourceOperand(ops[1], e);
      AddMemWriteback(m, e);
      e.reads_memory = true;
      break;
    }
    case Mnemonic::kStr:
    case Mnemonic::kStrb:
    case Mnemonic::kStrh: {
      const auto& m = std::get<MemRef>(ops[1]);
      e.uses.Insert(inst.RegAt(0));
      AddSourceOperand(ops[1], e);
      AddMemWriteback(m, e);
      e.writes_memory = true;
      break;
    }
    case Mnemonic::kLdmia:
    case Mnemonic::kLdmdb: {
      const auto& base = std::get<RegOperand>(ops[0]);
      e.uses.Insert(base.reg);
      e.defs |= std::get<RegisterList>(ops[1]).regs;
      if (base.writeback) e.defs.Insert(base.reg);
      e.reads_memory = true;
      break;
    }
    case Mnemonic::kStmia:
    case Mnemonic::kStmdb: {
      const auto& base = std::get<RegOperand>(ops[0]);
      e.uses.Insert(base.reg);
      e.uses |= std::get<RegisterList>(ops[1]).regs;
      if (base.writeback) e.defs.Insert(base.reg);
      e.writes_memory = true;
      break;
    }
    case Mnemonic::kPush:
      e.uses.Insert(Reg::kSp);
      e.uses |= std::get<RegisterList>(ops[0]).regs;
      e.defs.Insert(Reg::kSp);
      e.writes_memory = true;
      break;
    case Mnemonic::kPop:
      e.uses.Insert(Reg::kSp);
      e.defs |= std::get<RegisterList>(ops[0]).regs;
      e.defs.Insert(Reg::kSp);
      e.reads_memory = true;
      break;
    case Mnemonic::kAdr:
      e.defs.Insert(inst.RegAt(0));
      break;
    case Mnemonic::kB:
      break;
    case Mnemonic::kBl: {
      const RegAndFlags clobbers = inst.clobbers.value_or(DefaultCallClobbers());
      e.uses = RegSet{Reg::kR0, Reg::kR1, Reg::kR2, Reg::kR3, Reg::kSp};
      e.defs = clobbers.regs;
      e.defs.Insert(Reg::kLr);
      if (clobbers.flags) e.flags_must_write = kAllFlags;
      e.reads_memory = true;
      e.writes_memory = true;
      break;
    }
    case Mnemonic::kBx:
      e.uses.Insert(inst.RegAt(0));
      break;
    case Mnemonic::kMrs:
      e.defs.Insert(inst.RegAt(0));
      e.flags_read = kAllFlags;
      break;
    case Mnemonic::kMsr:
      e.uses.Insert(inst.RegAt(1));
      e.flags_must_write = std::get<SpecialReg>(ops[0]).psr == Psr::kApsrNzcv
                               ? kNzcvFlags
                               : kAllFlags;
      break;
    case Mnemonic::kIt:
      e.flags_read = FlagsReadBy(inst.it->first);
      break;
    case Mnemonic::kNop:
      break;
  }
  e.flags_may_write |= e.flags_must_write;
  if (inst.cond != Cond::kAl) {
    e.flags_read |= FlagsReadBy(inst.cond);
    e.flags_must_write = 0;
  } else {
    e.must_defs = e.defs;
  }
  return e;
}

bool WritesPc(const Instruction& inst) {
  if (IsBranch(inst.mnemonic)) return true;
  return EffectsOf(inst).defs.Contains(Reg::kPc);
}

bool ReadsPcOperand(const Instruction& inst) {
  if (IsBranch(inst.mnemonic)) return false;
  return EffectsOf(inst).uses.Contains(Reg::kPc);
}

int RrxOperandIndex(const Instruction& inst) {
  for (size_t k = 0; k < inst.operands.size(); ++k) {
    auto* s = std::get_if<ShiftedRegister>(&inst.operands[k]);
    if (s && s->kind == ShiftKind::kRrx) return static_cast<int>(k);
  }
  return -1;
}

}  // namespace skipshield
