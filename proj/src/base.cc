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

#include "skipshield/base.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace skipshield {
namespace {

constexpr std::array<std::string_view, kNumRegs> kRegNames = {
    "r0", "r1", "r2", "r3", "r4", "r5", "r6", "r7",
    "r8", "r9", "r10", "r11", "r12", "sp", "lr", "pc",
};

constexpr std::array<std::string_view, 15> kCondNames = {
    "eq", "ne", "cs", "cc", "mi", "pl", "vs", "vc",
    "hi", "ls", "ge", "lt", "gt", "le", "al",
};

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string_view RegName(Reg r) { return kRegNames[Index(r)]; }

std::optional<Reg> ParseReg(std::string_view text) {
  const std::string t = Lower(text);
  for (int i = 0; i < kNumRegs; ++i) {
    if (t == kRegNames[i]) return RegAt(i);
  }
  if (t == "r13") return Reg::kSp;
  if (t == "r14") return Reg::kLr;
  if (t == "r15") return Reg::kPc;
  if (t == "ip") return Reg::kR12;
  if (t == "fp") return Reg::kR11;
  if (t == "sl") return Reg::kR10;
  if (t == "sb") return Reg::kR9;
  return std::nullopt;
}

std::vector<Reg> RegSet::ToVector() const {
  std::vector<Reg> out;
  for (int i = 0; i < kNumRegs; ++i) {
    if ((mask_ >> i) & 1u) out.push_back(RegAt(i));
  }
  return out;
}

std::string_view CondName(Cond c) {
  return kCondNames[static_cast<int>(c)];
}

std::optional<Cond> ParseCond(std::string_view text) {
  const std::string t = Lower(text);
  for (size_t i = 0; i < kCondNames.size(); ++i) {
    if (t == kCondNames[i]) return static_cast<Cond>(i);
  }
  if (t == "hs") return Cond::kCs;
  if (t == "lo") return Cond::kCc;
  return std::nullopt;
}

Cond Invert(Cond c) {
  // Conditions come in complementary pairs; AL has no inverse.
  if (c == Cond::kAl) return c;
  return static_cast<Cond>(static_cast<int>(c) ^ 1);
}

uint8_t FlagsReadBy(Cond c) {
  switch (c) {
    case Cond::kEq:
    case Cond::kNe:
      return kFlagZ;
    case Cond::kCs:
    case Cond::kCc:
      return kFlagC;
    case Cond::kMi:
    case Cond::kPl:
      return kFlagN;
    case Cond::kVs:
    case Cond::kVc:
      return kFlagV;
    case Cond::kHi:
    case Cond::kLs:
      return kFlagC | kFlagZ;
    case Cond::kGe:
    case Cond::kLt:
      return kFlagN | kFlagV;
    case Cond::kGt:
    case Cond::kLe:
      return kFlagN | kFlagV | kFlagZ;
    case Cond::kAl:
      return 0;
  }
  return 0;
}

bool ConditionHolds(Cond c, uint8_t flags) {
  const bool n = flags & kFlagN;
  const bool z = flags & kFlagZ;
  const bool cf = flags & kFlagC;
  const bool v = flags & kFlagV;
  switch (c) {
    case Cond::kEq: return z;
    case Cond::kNe: return !z;
    case Cond::kCs: return cf;
    case Cond::kCc: return !cf;
    case Cond::kMi: return n;
    case Cond::kPl: return !n;
    case Cond::kVs: return v;
    case Cond::kVc: return !v;
    case Cond::kHi: return cf && !z;
    case Cond::kLs: return !cf || z;
    case Cond::kGe: return n == v;
    case Cond::kLt: return n != v;
    case Cond::kGt: return !z && n == v;
    case Cond::kLe: return z || n != v;
    case Cond::kAl: return true;
  }
  return true;
}

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax: return "SyntaxError";
    case ErrorCode::kUnsupportedInstruction: return "UnsupportedInstruction";
    case ErrorCode::kUnresolvedLabel: return "UnresolvedLabel";
    case ErrorCode::kIndirectBranch: return "IndirectBranch";
    case ErrorCode::kHardening: return "HardeningError";
    case ErrorCode::kNoScratchAvailable: return "NoScratchAvailable";
    case ErrorCode::kFlagsAliveAfter: return "FlagsAliveAfter";
    case ErrorCode::kItBlockTooLong: return "ItBlockTooLongAfterHardening";
    case ErrorCode::kMemoryFault: return "MemoryFault";
    case ErrorCode::kNonTermination: return "NonTermination";
    case ErrorCode::kUnmodeledInstruction: return "UnmodeledInstruction";
    case ErrorCode::kStateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::kReferenceRunFailed: return "ReferenceRunFailed";
    case ErrorCode::kMismatchedPrograms: return "MismatchedPrograms";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Error";
}

}  // namespace skipshield
