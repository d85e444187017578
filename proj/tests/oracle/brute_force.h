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
// Reference enumerator for skip-fault equivalence, kept separate from the
// verifier on purpose: it scans operands itself, enumerates every referenced
// register (read or not), discovers load inputs by recursion, and runs each
// skip position from scratch. Only the machine model is shared.

#ifndef SKIPSHIELD_TESTS_ORACLE_BRUTE_FORCE_H_
#define SKIPSHIELD_TESTS_ORACLE_BRUTE_FORCE_H_

#include <cstdint>
#include <string>

#include "skipshield/asm.h"
#include "skipshield/verifier.h"

namespace skipshield::oracle {

struct OracleResult {
  bool passed = true;
  uint64_t runs = 0;     // replacement runs, all scenarios
  std::string failure;   // first divergence, human readable
};

OracleResult BruteForceCheck(const Sequence& original,
                             const Sequence& replacement,
                             const EquivalenceSpec& spec, int width);

}  // namespace skipshield::oracle

#endif  // SKIPSHIELD_TESTS_ORACLE_BRUTE_FORCE_H_
