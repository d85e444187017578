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
// In-memory form of a unified-syntax Thumb-2 assembly file, plus the parser
// and emitter for the subset skipshield understands.
//
// Accepted syntax, briefly:
//   - one statement per line; `;` and `@` start a comment;
//   - `name:` defines a label (optionally followed by an instruction);
//   - lines starting with `.` are directives, kept verbatim; `.extern sym`
//     declares `sym` as an external branch target;
//   - `@clobbers(r0, r1, flags)` after a `bl` and `@exit-live(r0, flags)`
//     after a `bx lr` are annotations consumed by the liveness analysis.

#ifndef SKIPSHIELD_ASM_H_
#define SKIPSHIELD_ASM_H_

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skipshield/base.h"

namespace skipshield {

enum class Mnemonic : uint8_t {
  kAdc, kAdd, kAdr, kAnd, kAsr, kB, kBic, kBl, kBx, kCmn, kCmp, kEor,
  kIt, kLdmdb, kLdmia, kLdr, kLdrb, kLdrh, kLsl, kLsr, kMov, kMrs, kMsr,
  kMul, kMvn, kNop, kOrr, kPop, kPush, kRor, kRrx, kRsb, kSbc, kStmdb,
  kStmia, kStr, kStrb, kStrh, kSub, kTeq, kTst, kUmlal, kUmull,
};

std::string_view MnemonicName(Mnemonic m);

enum class ShiftKind : uint8_t { kLsl, kLsr, kAsr, kRor, kRrx };
std::string_view ShiftName(ShiftKind k);

enum class IndexMode : uint8_t { kOffset, kPreIndexed, kPostIndexed };

enum class Psr : uint8_t { kApsr, kApsrNzcvq, kApsrNzcv };
std::string_view PsrName(Psr p);

struct RegOperand {
  Reg reg = Reg::kR0;
  bool writeback = false;  // `rn!` in load/store-multiple
  bool operator==(const RegOperand&) const = default;
};

struct Immediate {
  int64_t value = 0;
  bool operator==(const Immediate&) const = default;
};

struct ShiftedRegister {
  Reg reg = Reg::kR0;
  ShiftKind kind = ShiftKind::kLsl;
  uint8_t amount = 0;  // always 0 for rrx
  bool operator==(const ShiftedRegister&) const = default;
};

struct MemRef {
  Reg base = Reg::kR0;
  std::optional<int32_t> imm;  // `[rn, #imm]`, or the post-index amount
  std::optional<Reg> index;    // `[rn, rm{, lsl #k}]`
  uint8_t index_lsl = 0;
  IndexMode mode = IndexMode::kOffset;
  bool operator==(const MemRef&) const = default;
};

struct RegisterList {
  RegSet regs;
  bool operator==(const RegisterList&) const = default;
};

struct LabelRef {
  std::string name;
  bool operator==(const LabelRef&) const = default;
};

struct SpecialReg {
  Psr psr = Psr::kApsr;
  bool operator==(const SpecialReg&) const = default;
};

using Operand = std::variant<RegOperand, Immediate, ShiftedRegister, MemRef,
                             RegisterList, LabelRef, SpecialReg>;

// `it{x{y{z}}} firstcond`. `mask` holds the t/e letters after "it".
struct ItSpec {
  Cond first = Cond::kAl;
  std::string mask;

  int SlotCount() const { return 1 + static_cast<int>(mask.size()); }
  Cond SlotCond(int slot) const;
  bool operator==(const ItSpec&) const = default;
};

struct RegAndFlags {
  RegSet regs;
  bool flags = false;
  bool operator==(const RegAndFlags&) const = default;
};

enum class WidthQualifier : uint8_t { kNone, kWide, kNarrow };

struct Instruction {
  Mnemonic mnemonic = Mnemonic::kNop;
  Cond cond = Cond::kAl;
  bool sets_flags = false;
  std::vector<Operand> operands;
  std::optional<ItSpec> it;
  WidthQualifier qualifier = WidthQualifier::kNone;
  std::optional<RegAndFlags> clobbers;   // `@clobbers(...)` on a bl
  std::optional<RegAndFlags> exit_live;  // `@exit-live(...)` on a bx lr
  int line = 0;

  // Structural equality; the source line is not compared.
  bool operator==(const Instruction& other) const;

  Reg RegAt(size_t k) const { return std::get<RegOperand>(operands[k]).reg; }
  bool IsReg(size_t k) const {
    return k < operands.size() &&
           std::holds_alternative<RegOperand>(operands[k]);
  }
  template <typename T>
  const T* Get(size_t k) const {
    return k < operands.size() ? std::get_if<T>(&operands[k]) : nullptr;
  }
  // The branch/adr target, if any.
  const std::string* Target() const;
};

struct Label {
  std::string name;
  int line = 0;
  bool operator==(const Label& o) const { return name == o.name; }
};

struct Directive {
  std::string text;
  int line = 0;
  bool operator==(const Directive& o) const { return text == o.text; }
};

using Item = std::variant<Label, Instruction, Directive>;
using Sequence = std::vector<Item>;

struct Program {
  std::vector<Item> items;

  // Names declared with `.extern`.
  std::set<std::string> Externals() const;
  std::vector<const Instruction*> Instructions() const;
  size_t InstructionCount() const;
  bool operator==(const Program&) const = default;
};

enum class SupportLevel { kSupported, kRejectedSpecific, kUnknown };

// Support level of a mnemonic spelling without condition/flag suffixes
// ("add", "mcr", ...).
SupportLevel LookupSupport(std::string_view base_mnemonic);

// Throws Error(kSyntax) or Error(kUnsupportedInstruction).
Program ParseProgram(std::string_view text);
// Parses a single instruction statement (no label, no directive).
Instruction ParseInstruction(std::string_view text);
// Convenience: the items of ParseProgram(text).
Sequence ParseSequence(std::string_view text);

std::string EmitInstruction(const Instruction& inst);
std::string EmitItems(std::span<const Item> items);
std::string EmitProgram(const Program& program);

}  // namespace skipshield

#endif  // SKIPSHIELD_ASM_H_
