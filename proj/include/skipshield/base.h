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
// Core vocabulary shared by every skipshield module: registers, condition
// codes, register sets and the error type.

#ifndef SKIPSHIELD_BASE_H_
#define SKIPSHIELD_BASE_H_

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skipshield {

enum class Reg : uint8_t {
  kR0, kR1, kR2, kR3, kR4, kR5, kR6, kR7,
  kR8, kR9, kR10, kR11, kR12, kSp, kLr, kPc,
};

constexpr int kNumRegs = 16;

constexpr int Index(Reg r) { return static_cast<int>(r); }
constexpr Reg RegAt(int index) { return static_cast<Reg>(index); }

std::string_view RegName(Reg r);
// Accepts r0-r15, sp, lr, pc and the ip/fp/sl/sb aliases (case-insensitive).
std::optional<Reg> ParseReg(std::string_view text);

// Small value-type set of registers backed by a 16-bit mask.
class RegSet {
 public:
  constexpr RegSet() = default;
  constexpr explicit RegSet(uint16_t mask) : mask_(mask) {}
  constexpr RegSet(std::initializer_list<Reg> regs) {
    for (Reg r : regs) Insert(r);
  }

  constexpr bool Contains(Reg r) const { return (mask_ >> Index(r)) & 1u; }
  constexpr void Insert(Reg r) { mask_ |= static_cast<uint16_t>(1u << Index(r)); }
  constexpr void Erase(Reg r) { mask_ &= static_cast<uint16_t>(~(1u << Index(r))); }
  constexpr bool Empty() const { return mask_ == 0; }
  constexpr int Size() const { return std::popcount(mask_); }
  constexpr uint16_t mask() const { return mask_; }

  constexpr RegSet operator|(RegSet o) const { return RegSet(mask_ | o.mask_); }
  constexpr RegSet operator&(RegSet o) const { return RegSet(mask_ & o.mask_); }
  constexpr RegSet operator-(RegSet o) const {
    return RegSet(static_cast<uint16_t>(mask_ & ~o.mask_));
  }
  constexpr RegSet& operator|=(RegSet o) { mask_ |= o.mask_; return *this; }
  constexpr bool operator==(const RegSet&) const = default;

  // Ascending register order.
  std::vector<Reg> ToVector() const;

 private:
  uint16_t mask_ = 0;
};

enum class Cond : uint8_t {
  kEq, kNe, kCs, kCc, kMi, kPl, kVs, kVc,
  kHi, kLs, kGe, kLt, kGt, kLe, kAl,
};

std::string_view CondName(Cond c);
// Accepts the architectural names plus the hs/lo aliases.
std::optional<Cond> ParseCond(std::string_view text);
Cond Invert(Cond c);

// Processor flags, one bit each. Bit positions are internal to the model.
enum Flag : uint8_t {
  kFlagN = 1u << 0,
  kFlagZ = 1u << 1,
  kFlagC = 1u << 2,
  kFlagV = 1u << 3,
  kFlagQ = 1u << 4,
};
constexpr uint8_t kAllFlags = kFlagN | kFlagZ | kFlagC | kFlagV | kFlagQ;
constexpr uint8_t kNzcvFlags = kFlagN | kFlagZ | kFlagC | kFlagV;

// Flags read by a condition code.
uint8_t FlagsReadBy(Cond c);
bool ConditionHolds(Cond c, uint8_t flags);

enum class ErrorCode {
  kSyntax,
  kUnsupportedInstruction,
  kUnresolvedLabel,
  kIndirectBranch,
  kHardening,
  kNoScratchAvailable,
  kFlagsAliveAfter,
  kItBlockTooLong,
  kMemoryFault,
  kNonTermination,
  kUnmodeledInstruction,
  kStateSpaceTooLarge,
  kReferenceRunFailed,
  kMismatchedPrograms,
  kConfig,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, int line = 0)
      : std::runtime_error(std::move(message)), code_(code), line_(line) {}

  ErrorCode code() const { return code_; }
  // Source line, or 0 when not tied to a line.
  int line() const { return line_; }

 private:
  ErrorCode code_;
  int line_;
};

}  // namespace skipshield

#endif  // SKIPSHIELD_BASE_H_
