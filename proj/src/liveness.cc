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

#include "skipshield/liveness.h"

#include <algorithm>
#include <map>
#include <set>

#include "skipshield/isa.h"

namespace skipshield {
namespace {

constexpr RegSet kArgRegs{Reg::kR0, Reg::kR1, Reg::kR2, Reg::kR3};
constexpr RegSet kAlwaysLive{Reg::kSp, Reg::kPc};

RegAndFlags Union(const RegAndFlags& a, const RegAndFlags& b) {
  return {a.regs | b.regs, a.flags || b.flags};
}

RegAndFlags AllLive() { return {RegSet(0xffff), true}; }

class CfgBuilder {
 public:
  CfgBuilder(const Program& program, const LivenessOptions& options)
      : fallthrough_exit_(options.exit_live.value_or(DefaultExitLive())) {
    externals_ = program.Externals();
    std::vector<std::string> pending_labels;
    for (size_t i = 0; i < program.items.size(); ++i) {
      const Item& item = program.items[i];
      if (auto* label = std::get_if<Label>(&item)) {
        pending_labels.push_back(label->name);
      } else if (auto* inst = std::get_if<Instruction>(&item)) {
        const int ordinal = static_cast<int>(insts_.size());
        for (auto& name : pending_labels) label_ordinal_[name] = ordinal;
        pending_labels.clear();
        insts_.push_back(inst);
        cfg_.item_index.push_back(i);
      }
    }
    // Labels at the very end resolve to the fall-off exit.
    for (auto& name : pending_labels) label_ordinal_[name] = End();
    cfg_.nodes.resize(insts_.size());
  }

  Cfg Build() {
    const int n = End();
    int k = 0;
    while (k < n) {
      const Instruction& inst = *insts_[k];
      if (inst.mnemonic == Mnemonic::kIt) {
        k = BuildItBlock(k);
      } else {
        BuildPlain(k, /*taken_only=*/false, Next(k));
        ++k;
      }
    }
    BuildBlocks();
    return std::move(cfg_);
  }

 private:
  int End() const { return static_cast<int>(insts_.size()); }
  int Next(int k) const { return k + 1; }

  void AddSucc(int from, int to) {
    CfgNode& node = cfg_.nodes[from];
    if (to >= End()) {
      AddExit(from, fallthrough_exit_);
      return;
    }
    if (std::find(node.succs.begin(), node.succs.end(), to) ==
        node.succs.end()) {
      node.succs.push_back(to);
    }
  }

  void AddExit(int from, const RegAndFlags& live) {
    CfgNode& node = cfg_.nodes[from];
    node.exit_live = node.exits ? Union(node.exit_live, live) : live;
    node.exits = true;
  }

  // Resolves a branch target: internal ordinal, or nullopt for `.extern`.
  std::optional<int> Resolve(const Instruction& inst) {
    const std::string& name = *inst.Target();
    if (auto it = label_ordinal_.find(name); it != label_ordinal_.end()) {
      return it->second;
    }
    if (externals_.count(name)) return std::nullopt;
    throw Error(ErrorCode::kUnresolvedLabel,
                "unresolved label '" + name + "'", inst.line);
  }

  RegAndFlags ReturnLive(const Instruction& inst) const {
    if (inst.exit_live) return *inst.exit_live;
    return fallthrough_exit_;
  }

  // Wires node k. `next` is where execution continues when the instruction
  // does not transfer control. `taken_only` drops the fall-through edge of
  // a conditional branch whose condition is known to hold (it-block arm).
  void BuildPlain(int k, bool taken_only, int next) {
    const Instruction& inst = *insts_[k];
    const bool conditional = inst.cond != Cond::kAl && !taken_only;
    switch (inst.mnemonic) {
      case Mnemonic::kB: {
        auto target = Resolve(inst);
        if (target) {
          AddSucc(k, *target);
        } else {
          // Tail call: arguments and callee-visible state are live.
          AddExit(k, Union(fallthrough_exit_, {kArgRegs, false}));
        }
        if (conditional) AddSucc(k, next);
        return;
      }
      case Mnemonic::kBl:
        Resolve(inst);
        AddSucc(k, next);
        return;
      case Mnemonic::kBx:
        if (inst.RegAt(0) != Reg::kLr) {
          throw Error(ErrorCode::kIndirectBranch,
                      "indirect branch through " +
                          std::string(RegName(inst.RegAt(0))) +
                          " is not supported",
                      inst.line);
        }
        AddExit(k, ReturnLive(inst));
        if (conditional) AddSucc(k, next);
        return;
      case Mnemonic::kAdr:
        Resolve(inst);
        AddSucc(k, next);
        return;
      default:
        break;
    }
    if (EffectsOf(inst).defs.Contains(Reg::kPc)) {
      // pop {.., pc} / ldm {.., pc} return; any other pc write is opaque.
      const bool is_return = inst.mnemonic == Mnemonic::kPop ||
                             inst.mnemonic == Mnemonic::kLdmia;
      AddExit(k, is_return ? ReturnLive(inst) : AllLive());
      if (conditional) AddSucc(k, next);
      return;
    }
    AddSucc(k, next);
  }

  // Returns the ordinal following the it block.
  int BuildItBlock(int k) {
    const Instruction& it = *insts_[k];
    const int slots = it.it->SlotCount();
    const int after = k + 1 + slots;
    bool linear = false;
    for (int s = 0; s + 1 < slots; ++s) {
      if (EffectsOf(*insts_[k + 1 + s]).flags_may_write != 0) linear = true;
    }
    for (int s = 0; s < slots; ++s) {
      cfg_.nodes[k + 1 + s].in_it_block = true;
    }
    if (linear) {
      AddSucc(k, k + 1);
      for (int s = 0; s < slots; ++s) {
        const int node = k + 1 + s;
        cfg_.nodes[node].kills = false;
        BuildPlain(node, /*taken_only=*/false, node + 1);
      }
      return after;
    }
    // Arm graph: each slot continues with the next slot of the same arm.
    const Cond first = it.it->first;
    int first_else = after;
    for (int s = 0; s < slots; ++s) {
      if (it.it->SlotCond(s) != first) {
        first_else = k + 1 + s;
        break;
      }
    }
    AddSucc(k, k + 1);
    AddSucc(k, first_else);
    for (int s = 0; s < slots; ++s) {
      const Cond c = it.it->SlotCond(s);
      int next = after;
      for (int t = s + 1; t < slots; ++t) {
        if (it.it->SlotCond(t) == c) {
          next = k + 1 + t;
          break;
        }
      }
      BuildPlain(k + 1 + s, /*taken_only=*/true, next);
    }
    return after;
  }

  void BuildBlocks() {
    const int n = End();
    if (n == 0) return;
    std::set<int> leaders = {0};
    for (int k = 0; k < n; ++k) {
      const CfgNode& node = cfg_.nodes[k];
      const bool falls_through_only =
          !node.exits && node.succs.size() == 1 && node.succs[0] == k + 1;
      const Instruction& inst = *insts_[k];
      const bool ends_block = !falls_through_only ||
                              inst.mnemonic == Mnemonic::kIt ||
                              node.in_it_block;
      if (!ends_block) continue;
      if (k + 1 < n) leaders.insert(k + 1);
      for (int s : node.succs) {
        if (s < n) leaders.insert(s);
      }
    }
    std::vector<int> block_of(n);
    std::vector<int> starts(leaders.begin(), leaders.end());
    for (size_t b = 0; b < starts.size(); ++b) {
      BasicBlock block;
      block.first = starts[b];
      block.last = (b + 1 < starts.size() ? starts[b + 1] : n) - 1;
      for (int k = block.first; k <= block.last; ++k) {
        block_of[k] = static_cast<int>(b);
      }
      cfg_.blocks.push_back(block);
    }
    for (BasicBlock& block : cfg_.blocks) {
      const CfgNode& last = cfg_.nodes[block.last];
      block.exits = last.exits;
      for (int s : last.succs) {
        const int target = block_of[s];
        if (std::find(block.succs.begin(), block.succs.end(), target) ==
            block.succs.end()) {
          block.succs.push_back(target);
        }
      }
    }
  }

  RegAndFlags fallthrough_exit_;
  std::set<std::string> externals_;
  std::map<std::string, int> label_ordinal_;
  std::vector<const Instruction*> insts_;
  Cfg cfg_;
};

}  // namespace

RegAndFlags DefaultExitLive() {
  return {RegSet{Reg::kR0, Reg::kR1, Reg::kR4, Reg::kR5, Reg::kR6, Reg::kR7,
                 Reg::kR8, Reg::kR9, Reg::kR10, Reg::kR11, Reg::kSp, Reg::kLr},
          true};
}

size_t Cfg::EdgeCount() const {
  size_t edges = 0;
  for (const BasicBlock& b : blocks) edges += b.succs.size();
  return edges;
}

Cfg BuildCfg(const Program& program, const LivenessOptions& options) {
  return CfgBuilder(program, options).Build();
}

LivenessMap ComputeLiveness(const Program& program, const Cfg& cfg,
                            const LivenessOptions& options) {
  const size_t n = cfg.nodes.size();
  std::vector<RegAndFlags> uses(n), kills(n);
  for (size_t k = 0; k < n; ++k) {
    const CfgNode& node = cfg.nodes[k];
    Instruction inst = std::get<Instruction>(program.items[cfg.item_index[k]]);
    // On its own it-block arm a slot instruction executes unconditionally.
    if (node.in_it_block && node.kills) inst.cond = Cond::kAl;
    const Effects e = EffectsOf(inst);
    uses[k] = {e.uses, e.flags_read != 0 || node.in_it_block};
    if (node.kills) {
      kills[k] = {e.must_defs,
                  (e.flags_must_write & kNzcvFlags) == kNzcvFlags};
    }
  }

  std::vector<RegAndFlags> live_in(n), live_out(n);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = n; i-- > 0;) {
      const CfgNode& node = cfg.nodes[i];
      RegAndFlags out = node.exits ? node.exit_live : RegAndFlags{};
      for (int s : node.succs) out = Union(out, live_in[s]);
      out.regs |= kAlwaysLive;
      RegAndFlags in = {uses[i].regs | (out.regs - kills[i].regs),
                        uses[i].flags || (out.flags && !kills[i].flags)};
      in.regs |= kAlwaysLive;
      if (!(out == live_out[i]) || !(in == live_in[i])) {
        live_out[i] = out;
        live_in[i] = in;
        changed = true;
      }
    }
  }
  RegAndFlags exit = options.exit_live.value_or(DefaultExitLive());
  exit.regs |= kAlwaysLive;
  return LivenessMap(std::move(live_in), std::move(live_out), exit);
}

LivenessMap AnalyzeLiveness(const Program& program,
                            const LivenessOptions& options) {
  return ComputeLiveness(program, BuildCfg(program, options), options);
}

std::vector<Reg> DeadRegisters(const RegAndFlags& live) {
  std::vector<Reg> out;
  if (!live.regs.Contains(Reg::kR12)) out.push_back(Reg::kR12);
  for (int i = 0; i < kNumRegs; ++i) {
    const Reg r = RegAt(i);
    if (r == Reg::kR12 || r == Reg::kSp || r == Reg::kPc) continue;
    if (!live.regs.Contains(r)) out.push_back(r);
  }
  return out;
}

}  // namespace skipshield
