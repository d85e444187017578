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

#include <algorithm>

namespace skipshield {
namespace {

constexpr int kSp = Index(Reg::kSp);
constexpr int kLr = Index(Reg::kLr);
constexpr int kPc = Index(Reg::kPc);

uint8_t R(Reg r) { return static_cast<uint8_t>(Index(r)); }

// Result and carry-out of the barrel shifter at width w.
struct Shifted {
  uint32_t value;
  bool carry;
};

Shifted Shift(uint32_t v, ShiftKind kind, uint32_t n, bool carry_in, int w) {
  const uint64_t mask = WidthMask(w);
  const uint64_t x = v;
  switch (kind) {
    case ShiftKind::kLsl:
      if (n == 0) return {v, carry_in};
      if (n < static_cast<uint32_t>(w)) {
        return {static_cast<uint32_t>((x << n) & mask),
                static_cast<bool>((x >> (w - n)) & 1)};
      }
      return {0, n == static_cast<uint32_t>(w) && (x & 1)};
    case ShiftKind::kLsr:
      if (n == 0) return {v, carry_in};
      if (n < static_cast<uint32_t>(w)) {
        return {static_cast<uint32_t>(x >> n),
                static_cast<bool>((x >> (n - 1)) & 1)};
      }
      return {0, n == static_cast<uint32_t>(w) && ((x >> (w - 1)) & 1)};
    case ShiftKind::kAsr: {
      if (n == 0) return {v, carry_in};
      const bool sign = (x >> (w - 1)) & 1;
      if (n < static_cast<uint32_t>(w)) {
        uint64_t res = x >> n;
        if (sign) res |= mask & ~(mask >> n);
        return {static_cast<uint32_t>(res),
                static_cast<bool>((x >> (n - 1)) & 1)};
      }
      return {sign ? static_cast<uint32_t>(mask) : 0u, sign};
    }
    case ShiftKind::kRor: {
      if (n == 0) return {v, carry_in};
      const uint32_t r = n % static_cast<uint32_t>(w);
      const uint64_t res =
          r == 0 ? x : ((x >> r) | (x << (w - r))) & mask;
      return {static_cast<uint32_t>(res),
              static_cast<bool>((res >> (w - 1)) & 1)};
    }
    case ShiftKind::kRrx: {
      const uint64_t res = (static_cast<uint64_t>(carry_in) << (w - 1)) |
                           (x >> 1);
      return {static_cast<uint32_t>(res & mask), static_cast<bool>(x & 1)};
    }
  }
  return {v, carry_in};
}

uint32_t SizeMask(int size) {
  return size == 1 ? 0xffu : size == 2 ? 0xffffu : 0xffffffffu;
}

class Executor {
 public:
  Executor(const ExecContext& ctx, MachineState& s)
      : ctx_(ctx), s_(s), w_(ctx.width()), mask_(ctx.mask()) {}

  void Execute(const Op& op);
  void Return(uint32_t target);

 private:
  uint32_t Read(int r) {
    if (r == kPc) {
      throw Error(ErrorCode::kUnmodeledInstruction, "pc read as operand");
    }
    if ((s_.undefined >> r) & 1u) s_.read_undefined = true;
    return s_.regs[r];
  }

  void Write(int r, uint32_t v) {
    if (r == kPc) {
      throw Error(ErrorCode::kUnmodeledInstruction,
                  "data-processing write to pc");
    }
    const uint16_t bit = static_cast<uint16_t>(1u << r);
    s_.regs[r] = v & mask_;
    s_.written |= bit;
    s_.undefined &= static_cast<uint16_t>(~bit);
    s_.psr_tagged &= static_cast<uint16_t>(~bit);
  }

  bool Flag(uint8_t f) const { return (s_.flags & f) != 0; }

  void SetFlag(uint8_t f, bool v) {
    s_.flags = v ? (s_.flags | f) : (s_.flags & ~f);
    s_.flags_written |= f;
  }

  void SetNZ(uint32_t v) {
    SetFlag(kFlagN, (v >> (w_ - 1)) & 1u);
    SetFlag(kFlagZ, v == 0);
  }

  void SetNZCV(const AddResult& r) {
    SetNZ(r.value);
    SetFlag(kFlagC, r.carry);
    SetFlag(kFlagV, r.overflow);
  }

  // Flexible second operand; `writes_carry` reports whether the shifter
  // produced a carry that a flag-setting logical op must store.
  Shifted Operand2(const Op& op, bool* writes_carry) {
    const bool c = Flag(kFlagC);
    *writes_carry = false;
    switch (op.op2) {
      case Op::Op2::kReg:
        return {Read(op.rm), c};
      case Op::Op2::kImm:
        return {op.imm, c};
      case Op::Op2::kShifted:
        *writes_carry = !(op.shift == ShiftKind::kLsl && op.shift_amount == 0);
        return Shift(Read(op.rm), op.shift, op.shift_amount, c, w_);
      case Op::Op2::kNone:
        break;
    }
    return {0, c};
  }

  bool IsStack(int base) const { return base == kSp; }

  uint32_t Load(uint32_t address, int size, bool stack) {
    address &= mask_;
    if (auto* mem = std::get_if<AbstractMemory>(&s_.memory)) {
      const uint64_t key = MemKey(stack, address);
      if (auto v = mem->Written(key)) return *v & SizeMask(size) & mask_;
      if (mem->env == nullptr) return 0;
      return mem->env->Load(key) & SizeMask(size) & mask_;
    }
    auto& mem = std::get<ConcreteMemory>(s_.memory);
    auto v = mem.Read(address, size);
    if (!v) {
      throw Error(ErrorCode::kMemoryFault,
                  "load from unmapped address " + std::to_string(address));
    }
    return *v & mask_;
  }

  void Store(uint32_t address, int size, uint32_t value, bool stack) {
    address &= mask_;
    value &= SizeMask(size) & mask_;
    if (auto* mem = std::get_if<AbstractMemory>(&s_.memory)) {
      const uint64_t key = MemKey(stack, address);
      for (int i = 0; i < mem->num_cells; ++i) {
        if (mem->cells[i].key == key) {
          mem->cells[i].value = value;
          return;
        }
      }
      if (mem->num_cells == AbstractMemory::kMaxCells) {
        throw Error(ErrorCode::kUnmodeledInstruction,
                    "abstract memory cell capacity exceeded");
      }
      mem->cells[mem->num_cells++] = {key, value};
      return;
    }
    auto& mem = std::get<ConcreteMemory>(s_.memory);
    if (!mem.Write(address, size, value)) {
      throw Error(ErrorCode::kMemoryFault,
                  "store to unmapped address " + std::to_string(address));
    }
  }

  void Branch(const Op& op) {
    switch (op.target) {
      case Op::Target::kInternal:
        s_.pc = op.target_id;
        return;
      case Op::Target::kFunction:
        s_.in_function = true;
        return;
      case Op::Target::kExternal:
        s_.exit = {ExitKind::kLabel, static_cast<uint32_t>(op.target_id)};
        return;
      case Op::Target::kNone:
        break;
    }
    throw Error(ErrorCode::kUnmodeledInstruction, "branch without target");
  }

  void LoadMultiple(const Op& op, bool decrement_before) {
    const uint32_t base = Read(op.base);
    const int n = std::popcount(op.reglist);
    uint32_t address = decrement_before ? base - 4u * n : base;
    std::array<uint32_t, kNumRegs> loaded{};
    for (int r = 0; r < kNumRegs; ++r) {
      if (!((op.reglist >> r) & 1u)) continue;
      loaded[r] = Load(address, 4, IsStack(op.base));
      address += 4;
    }
    for (int r = 0; r < kNumRegs; ++r) {
      if (r == kPc || !((op.reglist >> r) & 1u)) continue;
      Write(r, loaded[r]);
    }
    if (op.writeback) {
      Write(op.base, decrement_before ? base - 4u * n : base + 4u * n);
    }
    if ((op.reglist >> kPc) & 1u) Return(loaded[kPc]);
  }

  void StoreMultiple(const Op& op, bool decrement_before) {
    const uint32_t base = Read(op.base);
    const int n = std::popcount(op.reglist);
    uint32_t address = decrement_before ? base - 4u * n : base;
    for (int r = 0; r < kNumRegs; ++r) {
      if (!((op.reglist >> r) & 1u)) continue;
      Store(address, 4, Read(r), IsStack(op.base));
      address += 4;
    }
    ++s_.store_counter;
    if (op.writeback) {
      Write(op.base, decrement_before ? base - 4u * n : base + 4u * n);
    }
  }

  uint32_t Address(const Op& op, uint32_t base) {
    if (op.mode == IndexMode::kPostIndexed) return base;
    if (op.has_index) return base + (Read(op.index) << op.index_lsl);
    return base + static_cast<uint32_t>(op.offset);
  }

  const ExecContext& ctx_;
  MachineState& s_;
  const int w_;
  const uint32_t mask_;
};

void Executor::Return(uint32_t target) {
  if ((target & 1u) == 0) {
    s_.exit = {ExitKind::kBadReturn, target & mask_};
    return;
  }
  const uint32_t address = target & ~1u & mask_;
  const int index = ctx_.IndexOfAddress(address);
  if (index < 0) {
    s_.exit = {ExitKind::kAddress, address};
    return;
  }
  s_.pc = index;
}

void Executor::Execute(const Op& op) {
  bool shifter_carry = false;
  switch (op.m) {
    case Mnemonic::kMov:
    case Mnemonic::kMvn: {
      const Shifted v = Operand2(op, &shifter_carry);
      const uint32_t res = op.m == Mnemonic::kMov ? v.value : ~v.value & mask_;
      const bool tagged = op.m == Mnemonic::kMov && op.op2 == Op::Op2::kReg &&
                          ((s_.psr_tagged >> op.rm) & 1u);
      const uint8_t tag = tagged ? s_.psr_tag[op.rm] : 0;
      Write(op.rd, res);
      if (tagged) {
        s_.psr_tagged |= static_cast<uint16_t>(1u << op.rd);
        s_.psr_tag[op.rd] = tag;
      }
      if (op.s) {
        SetNZ(res);
        if (shifter_carry) SetFlag(kFlagC, v.carry);
      }
      break;
    }
    case Mnemonic::kAnd:
    case Mnemonic::kOrr:
    case Mnemonic::kEor:
    case Mnemonic::kBic:
    case Mnemonic::kTst:
    case Mnemonic::kTeq: {
      const uint32_t x = Read(op.rn);
      const Shifted y = Operand2(op, &shifter_carry);
      uint32_t res = 0;
      switch (op.m) {
        case Mnemonic::kAnd:
        case Mnemonic::kTst: res = x & y.value; break;
        case Mnemonic::kOrr: res = x | y.value; break;
        case Mnemonic::kEor:
        case Mnemonic::kTeq: res = x ^ y.value; break;
        default: res = x & ~y.value & mask_; break;
      }
      const bool compare = op.m == Mnemonic::kTst || op.m == Mnemonic::kTeq;
      if (!compare) Write(op.rd, res);
      if (op.s || compare) {
        SetNZ(res);
        if (shifter_carry) SetFlag(kFlagC, y.carry);
      }
      break;
    }
    case Mnemonic::kAdd:
    case Mnemonic::kSub:
    case Mnemonic::kRsb:
    case Mnemonic::kAdc:
    case Mnemonic::kSbc:
    case Mnemonic::kCmp:
    case Mnemonic::kCmn: {
      const uint32_t x = Read(op.rn);
      const uint32_t y = Operand2(op, &shifter_carry).value;
      const bool c = Flag(kFlagC);
      AddResult r{};
      switch (op.m) {
        case Mnemonic::kAdd:
        case Mnemonic::kCmn: r = AddWithCarry(x, y, false, w_); break;
        case Mnemonic::kSub:
        case Mnemonic::kCmp: r = AddWithCarry(x, ~y & mask_, true, w_); break;
        case Mnemonic::kRsb: r = AddWithCarry(~x & mask_, y, true, w_); break;
        case Mnemonic::kAdc: r = AddWithCarry(x, y, c, w_); break;
        default: r = AddWithCarry(x, ~y & mask_, c, w_); break;
      }
      const bool compare = op.m == Mnemonic::kCmp || op.m == Mnemonic::kCmn;
      if (!compare) Write(op.rd, r.value);
      if (op.s || compare) SetNZCV(r);
      break;
    }
    case Mnemonic::kMul: {
      const uint64_t p = static_cast<uint64_t>(Read(op.rn)) * Read(op.rm);
      const uint32_t res = static_cast<uint32_t>(p) & mask_;
      Write(op.rd, res);
      if (op.s) SetNZ(res);
      break;
    }
    case Mnemonic::kUmull:
    case Mnemonic::kUmlal: {
      const uint64_t x = Read(op.rn);
      const uint64_t y = Read(op.rm);
      uint64_t acc = x * y;
      if (op.m == Mnemonic::kUmlal) {
        const uint64_t lo = Read(op.rd);
        const uint64_t hi = Read(op.ra);
        acc += (hi << w_) | lo;
      }
      Write(op.rd, static_cast<uint32_t>(acc));
      Write(op.ra, static_cast<uint32_t>(acc >> w_));
      break;
    }
    case Mnemonic::kLsl:
    case Mnemonic::kLsr:
    case Mnemonic::kAsr:
    case Mnemonic::kRor: {
      const uint32_t x = Read(op.rn);
      const uint32_t n =
          op.op2 == Op::Op2::kImm ? op.shift_amount : (Read(op.rm) & 0xffu);
      const ShiftKind kind =
          op.m == Mnemonic::kLsl   ? ShiftKind::kLsl
          : op.m == Mnemonic::kLsr ? ShiftKind::kLsr
          : op.m == Mnemonic::kAsr ? ShiftKind::kAsr
                                   : ShiftKind::kRor;
      const Shifted r = Shift(x, kind, n, Flag(kFlagC), w_);
      Write(op.rd, r.value);
      if (op.s) {
        SetNZ(r.value);
        if (n != 0) SetFlag(kFlagC, r.carry);
      }
      break;
    }
    case Mnemonic::kRrx: {
      const Shifted r = Shift(Read(op.rm), ShiftKind::kRrx, 1, Flag(kFlagC), w_);
      Write(op.rd, r.value);
      if (op.s) {
        SetNZ(r.value);
        SetFlag(kFlagC, r.carry);
      }
      break;
    }
    case Mnemonic::kLdr:
    case Mnemonic::kLdrb:
    case Mnemonic::kLdrh: {
      const uint32_t base = Read(op.base);
      const uint32_t v = Load(Address(op, base), op.size, IsStack(op.base));
      Write(op.rd, v);
      if (op.mode != IndexMode::kOffset) {
        Write(op.base, base + static_cast<uint32_t>(op.offset));
      }
      break;
    }
    case Mnemonic::kStr:
    case Mnemonic::kStrb:
    case Mnemonic::kStrh: {
      const uint32_t base = Read(op.base);
      Store(Address(op, base), op.size, Read(op.rd), IsStack(op.base));
      ++s_.store_counter;
      if (op.mode != IndexMode::kOffset) {
        Write(op.base, base + static_cast<uint32_t>(op.offset));
      }
      break;
    }
    case Mnemonic::kLdmia:
    case Mnemonic::kPop:
      LoadMultiple(op, false);
      break;
    case Mnemonic::kLdmdb:
      LoadMultiple(op, true);
      break;
    case Mnemonic::kStmia:
      StoreMultiple(op, false);
      break;
    case Mnemonic::kStmdb:
    case Mnemonic::kPush:
      StoreMultiple(op, true);
      break;
    case Mnemonic::kAdr:
      Write(op.rd, op.target_addr);
      break;
    case Mnemonic::kB:
      Branch(op);
      break;
    case Mnemonic::kBl:
      Write(kLr, op.next_addr | 1u);
      Branch(op);
      break;
    case Mnemonic::kBx:
      Return(Read(op.rm));
      break;
    case Mnemonic::kMrs:
      Write(op.rd, PackFlags(s_.flags, w_));
      s_.psr_tagged |= static_cast<uint16_t>(1u << op.rd);
      s_.psr_tag[op.rd] = s_.flags;
      break;
    case Mnemonic::kMsr: {
      const uint32_t v = Read(op.rn);
      const uint8_t f = ((s_.psr_tagged >> op.rn) & 1u) ? s_.psr_tag[op.rn]
                                                        : UnpackFlags(v, w_);
      const uint8_t which =
          op.psr == Psr::kApsrNzcv ? kNzcvFlags : kAllFlags;
      s_.flags = static_cast<uint8_t>((s_.flags & ~which) | (f & which));
      s_.flags_written |= which;
      break;
    }
    case Mnemonic::kIt:
    case Mnemonic::kNop:
      break;
  }
}

}  // namespace

uint32_t PackFlags(uint8_t flags, int width) {
  const uint32_t packed = ((flags & kFlagN) ? 16u : 0u) |
                          ((flags & kFlagZ) ? 8u : 0u) |
                          ((flags & kFlagC) ? 4u : 0u) |
                          ((flags & kFlagV) ? 2u : 0u) |
                          ((flags & kFlagQ) ? 1u : 0u);
  if (width >= 5) return packed << (width - 5);
  return packed >> (5 - width);
}

uint8_t UnpackFlags(uint32_t value, int width) {
  const uint32_t packed = width >= 5 ? (value >> (width - 5)) & 0x1fu
                                     : (value << (5 - width)) & 0x1fu;
  uint8_t flags = 0;
  if (packed & 16u) flags |= kFlagN;
  if (packed & 8u) flags |= kFlagZ;
  if (packed & 4u) flags |= kFlagC;
  if (packed & 2u) flags |= kFlagV;
  if (packed & 1u) flags |= kFlagQ;
  return flags;
}

uint32_t LoadEnvironment::Load(uint64_t key) {
  for (const auto& [k, var] : bindings_) {
    if (k == key) return values_[var];
  }
  const int var = static_cast<int>(bindings_.size());
  if (var >= static_cast<int>(values_.size())) {
    overflow_ = true;
    return 0;
  }
  bindings_.emplace_back(key, var);
  return values_[var];
}

std::optional<uint32_t> AbstractMemory::Written(uint64_t key) const {
  for (int i = 0; i < num_cells; ++i) {
    if (cells[i].key == key) return cells[i].value;
  }
  return std::nullopt;
}

void ConcreteMemory::AddRegion(uint32_t base, std::vector<uint8_t> bytes) {
  regions_.push_back({base, std::move(bytes)});
}

const ConcreteMemory::Region* ConcreteMemory::Find(uint32_t address,
                                                    int size) const {
  for (const Region& r : regions_) {
    const uint64_t end = static_cast<uint64_t>(r.base) + r.bytes.size();
    if (address >= r.base && static_cast<uint64_t>(address) + size <= end) {
      return &r;
    }
  }
  return nullptr;
}

ConcreteMemory::Region* ConcreteMemory::Find(uint32_t address, int size) {
  return const_cast<Region*>(
      static_cast<const ConcreteMemory*>(this)->Find(address, size));
}

std::optional<uint32_t> ConcreteMemory::Read(uint32_t address,
                                             int size) const {
  const Region* r = Find(address, size);
  if (r == nullptr) return std::nullopt;
  uint32_t v = 0;
  for (int i = size - 1; i >= 0; --i) {
    v = (v << 8) | r->bytes[address - r->base + i];
  }
  return v;
}

bool ConcreteMemory::Write(uint32_t address, int size, uint32_t value) {
  Region* r = Find(address, size);
  if (r == nullptr) return false;
  for (int i = 0; i < size; ++i) {
    r->bytes[address - r->base + i] = static_cast<uint8_t>(value >> (8 * i));
  }
  return true;
}

AddResult AddWithCarry(uint32_t x, uint32_t y, bool carry_in, int width) {
  const uint64_t mask = WidthMask(width);
  const uint64_t sum = static_cast<uint64_t>(x & mask) + (y & mask) + carry_in;
  const uint32_t value = static_cast<uint32_t>(sum & mask);
  const bool carry = (sum >> width) & 1u;
  const bool overflow = (((x ^ value) & (y ^ value)) >> (width - 1)) & 1u;
  return {value, carry, overflow};
}

namespace {

void DecodeOperand2(const Operand& operand, Op& op, uint32_t mask) {
  if (auto* r = std::get_if<RegOperand>(&operand)) {
    op.op2 = Op::Op2::kReg;
    op.rm = R(r->reg);
  } else if (auto* imm = std::get_if<Immediate>(&operand)) {
    op.op2 = Op::Op2::kImm;
    op.imm = static_cast<uint32_t>(imm->value) & mask;
    op.shift_amount = static_cast<uint8_t>(std::clamp<int64_t>(imm->value, 0, 255));
  } else if (auto* s = std::get_if<ShiftedRegister>(&operand)) {
    op.op2 = Op::Op2::kShifted;
    op.rm = R(s->reg);
    op.shift = s->kind;
    op.shift_amount = s->amount;
  }
}

// Decodes everything but control-flow targets.
Op Decode(const Instruction& inst, uint32_t mask) {
  Op op;
  op.m = inst.mnemonic;
  op.cond = inst.cond;
  op.s = inst.sets_flags;
  op.line = inst.line;
  const auto& ops = inst.operands;
  switch (inst.mnemonic) {
    case Mnemonic::kMov:
    case Mnemonic::kMvn:
      op.rd = R(inst.RegAt(0));
      DecodeOperand2(ops[1], op, mask);
      break;
    case Mnemonic::kCmp:
    case Mnemonic::kCmn:
    case Mnemonic::kTst:
    case Mnemonic::kTeq:
      op.rn = R(inst.RegAt(0));
      DecodeOperand2(ops[1], op, mask);
      break;
    case Mnemonic::kAdd:
    case Mnemonic::kSub:
    case Mnemonic::kRsb:
    case Mnemonic::kAdc:
    case Mnemonic::kSbc:
    case Mnemonic::kAnd:
    case Mnemonic::kOrr:
    case Mnemonic::kEor:
    case Mnemonic::kBic:
    case Mnemonic::kLsl:
    case Mnemonic::kLsr:
    case Mnemonic::kAsr:
    case Mnemonic::kRor:
    case Mnemonic::kMul:
      op.rd = R(inst.RegAt(0));
      op.rn = R(inst.RegAt(1));
      DecodeOperand2(ops[2], op, mask);
      break;
    case Mnemonic::kUmull:
    case Mnemonic::kUmlal:
      op.rd = R(inst.RegAt(0));
      op.ra = R(inst.RegAt(1));
      op.rn = R(inst.RegAt(2));
      op.rm = R(inst.RegAt(3));
      break;
    case Mnemonic::kRrx:
      op.rd = R(inst.RegAt(0));
      op.rm = R(inst.RegAt(1));
      break;
    case Mnemonic::kLdr:
    case Mnemonic::kLdrb:
    case Mnemonic::kLdrh:
    case Mnemonic::kStr:
    case Mnemonic::kStrb:
    case Mnemonic::kStrh: {
      op.rd = R(inst.RegAt(0));
      const auto& m = std::get<MemRef>(ops[1]);
      op.base = R(m.base);
      op.has_index = m.index.has_value();
      if (m.index) op.index = R(*m.index);
      op.index_lsl = m.index_lsl;
      op.offset = m.imm.value_or(0);
      op.mode = m.mode;
      op.size = (inst.mnemonic == Mnemonic::kLdrb ||
                 inst.mnemonic == Mnemonic::kStrb)
                    ? 1
                : (inst.mnemonic == Mnemonic::kLdrh ||
                   inst.mnemonic == Mnemonic::kStrh)
                    ? 2
                    : 4;
      break;
    }
    case Mnemonic::kLdmia:
    case Mnemonic::kLdmdb:
    case Mnemonic::kStmia:
    case Mnemonic::kStmdb: {
      const auto& base = std::get<RegOperand>(ops[0]);
      op.base = R(base.reg);
      op.writeback = base.writeback;
      op.reglist = std::get<RegisterList>(ops[1]).regs.mask();
      break;
    }
    case Mnemonic::kPush:
    case Mnemonic::kPop:
      op.base = R(Reg::kSp);
      op.writeback = true;
      op.reglist = std::get<RegisterList>(ops[0]).regs.mask();
      break;
    case Mnemonic::kAdr:
      op.rd = R(inst.RegAt(0));
      break;
    case Mnemonic::kBx:
      op.rm = R(inst.RegAt(0));
      break;
    case Mnemonic::kMrs:
      op.rd = R(inst.RegAt(0));
      op.psr = std::get<SpecialReg>(ops[1]).psr;
      break;
    case Mnemonic::kMsr:
      op.psr = std::get<SpecialReg>(ops[0]).psr;
      op.rn = R(inst.RegAt(1));
      break;
    case Mnemonic::kIt:
      op.it_slots = static_cast<uint8_t>(inst.it->SlotCount());
      for (int s = 0; s < op.it_slots; ++s) op.it_conds[s] = inst.it->SlotCond(s);
      break;
    case Mnemonic::kB:
    case Mnemonic::kBl:
    case Mnemonic::kNop:
      break;
  }
  return op;
}

int SymbolIndex(std::vector<std::string>* symbols, const std::string& name) {
  auto it = std::find(symbols->begin(), symbols->end(), name);
  if (it != symbols->end()) return static_cast<int>(it - symbols->begin());
  symbols->push_back(name);
  return static_cast<int>(symbols->size() - 1);
}

}  // namespace

ExecContext ExecContext::ForSequence(
    std::span<const Item> items, int width,
    const std::set<std::string>& function_labels,
    std::vector<std::string>* symbols) {
  ExecContext ctx;
  ctx.width_ = width;
  ctx.mask_ = WidthMask(width);
  std::vector<const Instruction*> insts;
  for (const Item& item : items) {
    if (auto* label = std::get_if<Label>(&item)) {
      ctx.labels_[label->name] = static_cast<int>(insts.size());
    } else if (auto* inst = std::get_if<Instruction>(&item)) {
      insts.push_back(inst);
    }
  }
  // Address-taken points in order of appearance.
  std::map<int, uint32_t> point_address;
  auto take = [&](int index) {
    if (point_address.count(index)) return point_address[index];
    const uint32_t addr =
        static_cast<uint32_t>(2 * point_address.size()) & ctx.mask_;
    point_address[index] = addr;
    ctx.address_to_index_[addr] = index;
    return addr;
  };
  for (size_t k = 0; k < insts.size(); ++k) {
    const Instruction& inst = *insts[k];
    if (inst.mnemonic == Mnemonic::kAdr) {
      auto it = ctx.labels_.find(*inst.Target());
      if (it == ctx.labels_.end()) {
        throw Error(ErrorCode::kUnmodeledInstruction,
                    "adr to a label outside the sequence", inst.line);
      }
      take(it->second);
    } else if (inst.mnemonic == Mnemonic::kBl) {
      take(static_cast<int>(k + 1));
    }
  }
  for (size_t k = 0; k < insts.size(); ++k) {
    const Instruction& inst = *insts[k];
    Op op = Decode(inst, ctx.mask_);
    if (inst.mnemonic == Mnemonic::kB || inst.mnemonic == Mnemonic::kBl) {
      const std::string& name = *inst.Target();
      if (auto it = ctx.labels_.find(name); it != ctx.labels_.end()) {
        op.target = Op::Target::kInternal;
        op.target_id = it->second;
      } else if (function_labels.count(name)) {
        op.target = Op::Target::kFunction;
        op.target_id = SymbolIndex(symbols, name);
      } else {
        op.target = Op::Target::kExternal;
        op.target_id = SymbolIndex(symbols, name);
      }
      if (inst.mnemonic == Mnemonic::kBl) {
        op.next_addr = point_address.at(static_cast<int>(k + 1));
      }
    } else if (inst.mnemonic == Mnemonic::kAdr) {
      op.target_addr = point_address.at(ctx.labels_.at(*inst.Target()));
    }
    ctx.ops_.push_back(op);
  }
  return ctx;
}

ExecContext ExecContext::ForProgram(const Program& program, int width,
                                    uint32_t base) {
  ExecContext ctx;
  ctx.width_ = width;
  ctx.mask_ = WidthMask(width);
  std::vector<const Instruction*> insts;
  for (const Item& item : program.items) {
    if (auto* label = std::get_if<Label>(&item)) {
      ctx.labels_[label->name] = static_cast<int>(insts.size());
    } else if (auto* inst = std::get_if<Instruction>(&item)) {
      insts.push_back(inst);
    }
  }
  auto address_of = [&](int index) {
    return (base + 4u * static_cast<uint32_t>(index)) & ctx.mask_;
  };
  for (size_t k = 0; k <= insts.size(); ++k) {
    ctx.address_to_index_[address_of(static_cast<int>(k))] =
        static_cast<int>(k);
  }
  std::vector<std::string> symbols;
  for (size_t k = 0; k < insts.size(); ++k) {
    const Instruction& inst = *insts[k];
    Op op = Decode(inst, ctx.mask_);
    if (const std::string* name = inst.Target()) {
      auto it = ctx.labels_.find(*name);
      if (it != ctx.labels_.end()) {
        op.target = Op::Target::kInternal;
        op.target_id = it->second;
        op.target_addr = address_of(it->second);
      } else if (inst.mnemonic == Mnemonic::kAdr) {
        throw Error(ErrorCode::kUnresolvedLabel,
                    "adr to unknown label '" + *name + "'", inst.line);
      } else {
        op.target = Op::Target::kExternal;
        op.target_id = SymbolIndex(&symbols, *name);
      }
    }
    op.next_addr = address_of(static_cast<int>(k + 1));
    ctx.ops_.push_back(op);
  }
  return ctx;
}

int ExecContext::LabelIndex(const std::string& name) const {
  auto it = labels_.find(name);
  return it == labels_.end() ? -1 : it->second;
}

int ExecContext::IndexOfAddress(uint32_t address) const {
  auto it = address_to_index_.find(address);
  return it == address_to_index_.end() ? -1 : it->second;
}

std::string_view RunStatusName(RunStatus s) {
  switch (s) {
    case RunStatus::kFinished: return "finished";
    case RunStatus::kNonTermination: return "non-termination";
    case RunStatus::kMemoryFault: return "memory-fault";
    case RunStatus::kUnmodeled: return "unmodeled";
    case RunStatus::kEnvOverflow: return "symbolic-input-overflow";
  }
  return "?";
}

MachineState MakeState(Memory memory) {
  MachineState s;
  s.memory = std::move(memory);
  return s;
}

bool StepInPlace(const ExecContext& ctx, MachineState& s,
                 const RunOptions& options) {
  if (s.Done()) return false;
  const int n = static_cast<int>(ctx.size());
  Executor exec(ctx, s);
  ++s.steps;
  if (s.in_function) {
    // Leaving a modeled function: count the call and return through lr.
    s.in_function = false;
    ++s.call_counter;
    exec.Return(s.regs[kLr]);
  } else if (s.pc >= n) {
    s.exit = {ExitKind::kFallthrough, 0};
    return false;
  } else {
    const Op& op = ctx.ops()[s.pc];
    const bool in_shadow = !s.it.Empty();
    const Cond slot = in_shadow ? s.it.Pop() : Cond::kAl;
    const int64_t dynamic_index = static_cast<int64_t>(s.executed++);
    if (!s.fault_occurred && (options.skip_static == s.pc ||
                              options.skip_dynamic == dynamic_index)) {
      s.fault_occurred = true;
      ++s.pc;
    } else if (op.m == Mnemonic::kIt) {
      // An it inside an it shadow only consumes its slot.
      if (!in_shadow) {
        s.it.head = 0;
        s.it.size = op.it_slots;
        s.it.conds = op.it_conds;
      }
      ++s.pc;
    } else {
      bool execute = true;
      if (in_shadow) {
        execute = ConditionHolds(slot, s.flags);
      } else if (op.m == Mnemonic::kB) {
        execute = ConditionHolds(op.cond, s.flags);
      }
      const int pc_before = s.pc;
      ++s.pc;
      if (execute) {
        try {
          exec.Execute(op);
        } catch (const Error& e) {
          s.pc = pc_before;
          throw Error(e.code(), e.what(), op.line);
        }
      }
    }
  }
  if (!s.Done() && !s.in_function && s.pc >= n) {
    s.exit = {ExitKind::kFallthrough, 0};
  }
  return !s.Done();
}

MachineState Step(const ExecContext& ctx, const MachineState& s) {
  MachineState next = s;
  StepInPlace(ctx, next);
  return next;
}

RunStatus Run(const ExecContext& ctx, MachineState& s,
              const RunOptions& options) {
  const uint64_t bound =
      options.step_bound ? options.step_bound : 64 * std::max<size_t>(1, ctx.size());
  try {
    if (!s.Done() && !s.in_function &&
        s.pc >= static_cast<int>(ctx.size())) {
      s.exit = {ExitKind::kFallthrough, 0};
    }
    while (!s.Done()) {
      if (s.steps >= bound) return RunStatus::kNonTermination;
      StepInPlace(ctx, s, options);
    }
  } catch (const Error& e) {
    return e.code() == ErrorCode::kMemoryFault ? RunStatus::kMemoryFault
                                               : RunStatus::kUnmodeled;
  }
  if (auto* mem = std::get_if<AbstractMemory>(&s.memory)) {
    if (mem->env != nullptr && mem->env->overflow()) {
      return RunStatus::kEnvOverflow;
    }
  }
  return RunStatus::kFinished;
}

MachineState RunSequence(const ExecContext& ctx, MachineState s0,
                         std::optional<int> skip, uint64_t step_bound) {
  RunOptions options;
  options.skip_static = skip.value_or(-1);
  options.step_bound = step_bound;
  const uint64_t bound =
      step_bound ? step_bound : 64 * std::max<size_t>(1, ctx.size());
  if (!s0.Done() && s0.pc >= static_cast<int>(ctx.size())) {
    s0.exit = {ExitKind::kFallthrough, 0};
  }
  while (!s0.Done()) {
    if (s0.steps >= bound) {
      throw Error(ErrorCode::kNonTermination,
                  "step bound " + std::to_string(bound) + " exceeded");
    }
    StepInPlace(ctx, s0, options);
  }
  return s0;
}

}  // namespace skipshield
