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
// Whole-program skip campaigns on the concrete 32-bit machine. The program
// runs once without a fault, then once per dynamic instruction with that
// instruction skipped, and the observables at exit are compared.

#ifndef SKIPSHIELD_CAMPAIGN_H_
#define SKIPSHIELD_CAMPAIGN_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "skipshield/asm.h"
#include "skipshield/base.h"
#include "skipshield/machine.h"

namespace skipshield {

// Return address planted in lr; returning to it ends the run.
constexpr uint32_t kCampaignReturnAddress = 0xfffffff1u;
constexpr uint32_t kCampaignCodeBase = 0x08000000u;

struct MemoryRange {
  uint32_t base = 0;
  uint32_t size = 0;
};

struct MemoryImage {
  uint32_t base = 0;
  uint32_t size = 0;
  std::vector<uint8_t> bytes;  // zero-padded to size
};

struct CampaignConfig {
  std::string entry;
  std::map<Reg, uint32_t> regs;
  std::vector<MemoryImage> memory;
  std::vector<Reg> observable_regs;
  std::vector<MemoryRange> observable_mem;
  uint64_t bound = 1000000;
  // Inject at most this many sites (0: every dynamic instruction).
  uint64_t max_sites = 0;
  int threads = 1;
};

// Parses the JSON form: entry, regs{r0: ...}, memory[{base, size, hex}],
// observables{regs: [...], mem: [{base, size}]}, bound. Numbers may be
// given as integers or "0x..." strings. Throws Error(kConfig).
CampaignConfig ParseCampaignConfig(std::string_view json_text);

enum class Outcome { kSilent, kCorrupted, kCrashed };
std::string_view OutcomeName(Outcome o);

struct SiteResult {
  uint64_t site = 0;  // dynamic index of the skipped instruction
  int line = 0;       // its source line
  Outcome outcome = Outcome::kSilent;
  std::string detail;  // first differing observable, or the crash reason
};

struct CampaignReport {
  uint64_t reference_steps = 0;  // dynamic instructions of the reference run
  uint64_t total_sites = 0;      // injected runs
  bool capped = false;           // total_sites < reference_steps
  uint64_t silent = 0;
  uint64_t corrupted = 0;
  uint64_t crashed = 0;
  bool tolerant = true;  // no corrupted and no crashed site
  std::vector<SiteResult> sites;
};

// Compares the observables of a finished test run against the reference.
// `status` is the test run's status.
SiteResult DiffObservables(const MachineState& reference,
                           const MachineState& test, RunStatus status,
                           const CampaignConfig& config);

// Throws Error(kConfig) for a bad configuration or an unsupported program,
// Error(kReferenceRunFailed) when the fault-free run does not finish.
CampaignReport RunCampaign(const Program& program,
                           const CampaignConfig& config);

std::string CampaignReportToJson(const CampaignReport& report);

}  // namespace skipshield

#endif  // SKIPSHIELD_CAMPAIGN_H_
