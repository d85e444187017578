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
// Control-flow graph and backward register/flags liveness.
//
// Program points are instruction ordinals: the k-th Instruction item of the
// Program, labels and directives excluded. The flags are tracked as a single
// unit that is killed only by instructions that always write all of N, Z, C
// and V.

#ifndef SKIPSHIELD_LIVENESS_H_
#define SKIPSHIELD_LIVENESS_H_

#include <optional>
#include <vector>

#include "skipshield/asm.h"
#include "skipshield/base.h"

namespace skipshield {

// r0, r1 (return values), r4-r11 (callee-saved), sp, lr and the flags.
RegAndFlags DefaultExitLive();

struct LivenessOptions {
  // Replaces the default live set at every `bx lr` lacking an @exit-live
  // annotation.
  std::optional<RegAndFlags> exit_live;
};

struct CfgNode {
  std::vector<int> succs;  // instruction ordinals
  bool exits = false;      // control may leave the program here
  RegAndFlags exit_live;   // live set on the exit edge
  // False for it-block slots analysed as a linear chain, whose writes are
  // conditional.
  bool kills = true;
  bool in_it_block = false;
};

struct BasicBlock {
  int first = 0;  // inclusive instruction ordinals
  int last = 0;
  std::vector<int> succs;  // block indices
  bool exits = false;
};

struct Cfg {
  std::vector<CfgNode> nodes;
  std::vector<BasicBlock> blocks;
  std::vector<size_t> item_index;  // ordinal -> index into Program::items

  size_t EdgeCount() const;
};

// Throws Error(kUnresolvedLabel) for a target that is neither a label nor
// `.extern`, and Error(kIndirectBranch) for `bx` through anything but lr.
Cfg BuildCfg(const Program& program, const LivenessOptions& options = {});

class LivenessMap {
 public:
  LivenessMap() = default;
  LivenessMap(std::vector<RegAndFlags> live_in,
              std::vector<RegAndFlags> live_out, RegAndFlags exit)
      : live_in_(std::move(live_in)),
        live_out_(std::move(live_out)),
        exit_(exit) {}

  size_t size() const { return live_in_.size(); }
  const RegAndFlags& Before(int ordinal) const { return live_in_[ordinal]; }
  const RegAndFlags& After(int ordinal) const { return live_out_[ordinal]; }
  // Live set at the program's fall-off-the-end exit point.
  const RegAndFlags& Exit() const { return exit_; }

 private:
  std::vector<RegAndFlags> live_in_;
  std::vector<RegAndFlags> live_out_;
  RegAndFlags exit_;
};

LivenessMap ComputeLiveness(const Program& program, const Cfg& cfg,
                            const LivenessOptions& options = {});
LivenessMap AnalyzeLiveness(const Program& program,
                            const LivenessOptions& options = {});

// Registers not in `live`, never sp or pc, ordered r12 first then by index.
std::vector<Reg> DeadRegisters(const RegAndFlags& live);

}  // namespace skipshield

#endif  // SKIPSHIELD_LIVENESS_H_
