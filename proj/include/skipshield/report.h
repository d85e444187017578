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
// Static overhead accounting for a hardened program: instruction counts,
// estimated code bytes and estimated cycles. Both estimates are static; the
// cycle weights are a documented model, not a measurement.

#ifndef SKIPSHIELD_REPORT_H_
#define SKIPSHIELD_REPORT_H_

#include <map>
#include <string>
#include <string_view>

#include "skipshield/asm.h"
#include "skipshield/harden.h"

namespace skipshield {

// 2 when a 16-bit Thumb encoding exists for the instruction as written
// (low registers, small immediates, no shifted operand, or one of the
// high-register forms of mov/add/cmp), 4 otherwise. Label distances are
// unknown, so branches other than bl are assumed to be in narrow range.
int EstimateEncodingBytes(const Instruction& inst);

struct CycleModel {
  int alu = 1;            // data processing, moves, multiplies, it, nop
  int load_store = 2;
  int multiple_base = 1;  // load/store multiple: base + per_register * N
  int multiple_per_register = 1;
  int branch = 2;         // b, bl, bx; every branch counted as taken
  int psr = 1;            // mrs, msr
};

// Fields missing from the JSON object keep their defaults. Throws
// Error(kConfig).
CycleModel ParseCycleModel(std::string_view json_text);

int EstimateCycles(const Instruction& inst, const CycleModel& model = {});

struct Metric {
  int64_t original = 0;
  int64_t hardened = 0;
  double increase_percent = 0;  // rounded to one decimal
};

struct ScopeOverhead {
  Metric instructions;
  Metric code_bytes;
  Metric cycles;
};

struct RecipeOverhead {
  int instances = 0;
  int64_t original_instructions = 0;
  int64_t replacement_instructions = 0;
};

struct OverheadReport {
  ScopeOverhead program;   // whole program
  ScopeOverhead in_scope;  // hardened instructions only
  std::map<std::string, RecipeOverhead> recipes;
};

// (new - old) / old * 100 to one decimal; 0 when old is 0.
double IncreasePercent(int64_t original, int64_t hardened);

// Throws Error(kMismatchedPrograms) when `report` does not describe the
// transformation from `original` to `hardened`.
OverheadReport MeasureOverhead(const Program& original,
                               const Program& hardened,
                               const HardeningReport& report,
                               const CycleModel& model = {});

std::string OverheadReportToJson(const OverheadReport& report);

}  // namespace skipshield

#endif  // SKIPSHIELD_REPORT_H_
