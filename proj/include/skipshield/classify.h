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
// Sorting instructions into idempotent / separable / specific classes.

#ifndef SKIPSHIELD_CLASSIFY_H_
#define SKIPSHIELD_CLASSIFY_H_

#include <string>
#include <string_view>

#include "skipshield/asm.h"

namespace skipshield {

enum class InstrClass { kIdempotent, kSeparable, kSpecific, kRejected };

enum class Recipe {
  kNone,
  kDuplicate,
  kDestOverlapsSource,
  kPrePostIndexed,
  kStackManipulation,
  kUmlalSplit,
  kRrxFlagSplit,
  kSubroutineCall,
  kItBlock,
  kFlagsReadWrite,
};

std::string_view ClassName(InstrClass c);
// Recipe names as printed by the CLI ("dest-overlaps-source", ...).
std::string_view RecipeName(Recipe r);

struct Classification {
  InstrClass cls = InstrClass::kIdempotent;
  Recipe recipe = Recipe::kDuplicate;
  std::string reason;  // set for kRejected

  bool operator==(const Classification&) const = default;
};

// Deterministic; depends only on `inst` and, for instructions that both read
// and write the flags, on whether the flags are live after it. Conditional
// non-branch instructions always map to the it-block recipe.
Classification Classify(const Instruction& inst, bool flags_live_after);

// Source registers that are also written (the dest-overlaps-source set).
RegSet OverlappingRegisters(const Instruction& inst);

}  // namespace skipshield

#endif  // SKIPSHIELD_CLASSIFY_H_
