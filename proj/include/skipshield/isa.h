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
// Static read/write effects of a single instruction.

#ifndef SKIPSHIELD_ISA_H_
#define SKIPSHIELD_ISA_H_

#include <cstdint>

#include "skipshield/asm.h"
#include "skipshield/base.h"

namespace skipshield {

// Caller-visible effect of `bl` when no @clobbers annotation is given.
RegAndFlags DefaultCallClobbers();

struct Effects {
  RegSet uses;
  RegSet defs;       // registers possibly written
  RegSet must_defs;  // registers always written when the instruction executes
  uint8_t flags_read = 0;
  uint8_t flags_may_write = 0;
  uint8_t flags_must_write = 0;
  bool reads_memory = false;
  bool writes_memory = false;
};

// Effects as if the instruction executes (for `cond != AL` the condition's
// flags are added to flags_read). `bl` reports its callee clobbers as defs
// and r0-r3/sp as uses.
Effects EffectsOf(const Instruction& inst);

bool IsLoad(Mnemonic m);
bool IsStore(Mnemonic m);
bool IsLoadStoreMultiple(Mnemonic m);
bool IsBranch(Mnemonic m);  // b, bl, bx

// Logical data-processing ops whose `s` form leaves V alone.
bool IsLogical(Mnemonic m);
// add/sub/rsb/adc/sbc/cmp/cmn: full NZCV producers.
bool IsArithmetic(Mnemonic m);

// Whether the instruction writes pc (branches, pop/ldm with pc, mov pc).
bool WritesPc(const Instruction& inst);
// Whether pc appears as a plain source operand.
bool ReadsPcOperand(const Instruction& inst);

// Index of an rrx-shifted operand, or -1.
int RrxOperandIndex(const Instruction& inst);

}  // namespace skipshield

#endif  // SKIPSHIELD_ISA_H_
