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

#include "tests/oracle/brute_force.h"

#include <array>
#include <set>
#include <vector>

#include "skipshield/machine.h"

namespace skipshield::oracle {
namespace {

uint8_t CondReads(Cond c) {
  switch (c) {
    case Cond::kEq: case Cond::kNe: return kFlagZ;
    case Cond::kCs: case Cond::kCc: return kFlagC;
    case Cond::kMi: case Cond::kPl: return kFlagN;
    case Cond::kVs: case Cond::kVc: return kFlagV;
    case Cond::kHi: case Cond::kLs: return kFlagC | kFlagZ;
    case Cond::kGe: case Cond::kLt: return kFlagN | kFlagV;
    case Cond::kGt: case Cond::kLe: return kFlagN | kFlagZ | kFlagV;
    default: return 0;
  }
}

void Scan(const Instruction& inst, RegSet* regs, uint8_t* flags) {
  for (const Operand& op : inst.operands) {
    if (const auto* r = std::get_if<RegOperand>(&op)) regs->Insert(r->reg);
    if (const auto* s = std::get_if<ShiftedRegister>(&op)) {
      regs->Insert(s->reg);
      if (s->kind == ShiftKind::kRrx) *flags |= kFlagC;
    }
    if (const auto* m = std::get_if<MemRef>(&op)) {
      regs->Insert(m->base);
      if (m->index) regs->Insert(*m->index);
    }
    if (const auto* l = std::get_if<RegisterList>(&op)) *regs |= l->regs;
  }
  switch (inst.mnemonic) {
    case Mnemonic::kPush:
    case Mnemonic::kPop:
      regs->Insert(Reg::kSp);
      break;
    case Mnemonic::kBl:
      regs->Insert(Reg::kLr);
      break;
    case Mnemonic::kAdc:
    case Mnemonic::kSbc:
    case Mnemonic::kRrx:
      *flags |= kFlagC;
      break;
    case Mnemonic::kMrs:
      *flags |= kAllFlags;
      break;
    case Mnemonic::kIt:
      if (inst.it) *flags |= CondReads(inst.it->first);
      break;
    default:
      break;
  }
  *flags |= CondReads(inst.cond);
}

int CountInstructions(const Sequence& seq) {
  int n = 0;
  for (const Item& item : seq) n += std::holds_alternative<Instruction>(item);
  return n;
}

class Checker {
 public:
  Checker(const Sequence& original, const Sequence& replacement,
          const EquivalenceSpec& spec, int width)
      : spec_(spec), mask_(WidthMask(width)) {
    original_ = ExecContext::ForSequence(original, width, spec.function_labels,
                                         &symbols_);
    replacement_ = ExecContext::ForSequence(replacement, width,
                                            spec.function_labels, &symbols_);
    RegSet referenced;
    for (const Sequence* seq : {&original, &replacement}) {
      for (const Item& item : *seq) {
        if (const auto* inst = std::get_if<Instruction>(&item)) {
          Scan(*inst, &referenced, &flags_);
        }
      }
    }
    const RegSet excluded = spec.scratch | RegSet{Reg::kPc};
    for (int r = 0; r < kNumRegs; ++r) {
      if (referenced.Contains(RegAt(r)) && !excluded.Contains(RegAt(r))) {
        inputs_.push_back(r);
      }
    }
    const RegSet interest =
        spec.registers_of_interest.value_or(referenced) - excluded;
    for (int r = 0; r < kNumRegs; ++r) {
      if (interest.Contains(RegAt(r))) interest_.push_back(r);
    }
    for (uint8_t f : {kFlagN, kFlagZ, kFlagC, kFlagV, kFlagQ}) {
      if (flags_ & f) flag_list_.push_back(f);
    }
    skips_ = CountInstructions(replacement);
  }

  OracleResult Run() {
    AssignRegister(0);
    return result_;
  }

 private:
  // One nested loop per enumerated register, then one per flag.
  void AssignRegister(size_t i) {
    if (!result_.passed) return;
    if (i == inputs_.size()) {
      AssignFlag(0);
      return;
    }
    for (uint32_t v = 0; v <= mask_ && result_.passed; ++v) {
      regs_[inputs_[i]] = v;
      AssignRegister(i + 1);
    }
    regs_[inputs_[i]] = 0;
  }

  void AssignFlag(size_t i) {
    if (!result_.passed) return;
    if (i == flag_list_.size()) {
      std::vector<uint32_t> loads;
      Explore(loads);
      return;
    }
    for (int bit = 0; bit < 2 && result_.passed; ++bit) {
      if (bit) {
        flag_state_ |= flag_list_[i];
      } else {
        flag_state_ &= static_cast<uint8_t>(~flag_list_[i]);
      }
      AssignFlag(i + 1);
    }
    flag_state_ &= static_cast<uint8_t>(~flag_list_[i]);
  }

  MachineState Start(LoadEnvironment* env) const {
    MachineState s;
    s.regs = regs_;
    s.flags = flag_state_;
    s.undefined = spec_.scratch.mask();
    AbstractMemory mem;
    mem.env = env;
    s.memory = mem;
    return s;
  }

  // Runs everything with the given load inputs; one more nested loop per
  // load input the runs ask for.
  void Explore(std::vector<uint32_t>& loads) {
    LoadEnvironment env(loads);
    MachineState o;
    try {
      o = RunSequence(original_, Start(&env));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonTermination) throw;
      Fail("P1 " + Describe(-1));
      return;
    }
    if (env.overflow()) {
      Deeper(loads);
      return;
    }
    std::vector<MachineState> finals;
    for (int skip = -1; skip < skips_; ++skip) {
      MachineState r;
      try {
        r = RunSequence(replacement_, Start(&env),
                        skip < 0 ? std::nullopt : std::optional<int>(skip));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonTermination) throw;
        Fail("P2 " + Describe(skip));
        return;
      }
      ++result_.runs;
      if (env.overflow()) {
        Deeper(loads);
        return;
      }
      finals.push_back(std::move(r));
    }
    for (int skip = -1; skip < skips_; ++skip) {
      const std::string diff = Diff(o, finals[skip + 1], skip >= 0, env);
      if (!diff.empty()) {
        Fail("P3 " + Describe(skip) + ": " + diff);
        return;
      }
    }
  }

  void Deeper(std::vector<uint32_t>& loads) {
    loads.push_back(0);
    for (uint32_t v = 0; v <= mask_ && result_.passed; ++v) {
      loads.back() = v;
      Explore(loads);
    }
    loads.pop_back();
  }

  std::string Diff(const MachineState& o, const MachineState& r, bool faulted,
                   const LoadEnvironment& env) const {
    if (o.read_undefined || r.read_undefined) return "scratch read";
    if (!(o.exit == r.exit)) return "exit";
    for (int reg : interest_) {
      if (o.regs[reg] != r.regs[reg]) {
        return std::string(RegName(RegAt(reg))) + " " +
               std::to_string(o.regs[reg]) + " vs " +
               std::to_string(r.regs[reg]);
      }
    }
    const bool flags = spec_.compare_flags == FlagMode::kStrict ||
                       (spec_.compare_flags == FlagMode::kRelaxed && !faulted);
    if (flags) {
      for (uint8_t f : {kFlagN, kFlagZ, kFlagC, kFlagV, kFlagQ}) {
        // A flag nobody reads starts at an unknown value: a write on one
        // side only can always be told apart.
        const bool one_sided =
            ((o.flags_written ^ r.flags_written) & f) && !(flags_ & f);
        if (one_sided || ((o.flags ^ r.flags) & f)) return "flags";
      }
    }
    if (spec_.require_store_count && r.store_counter < o.store_counter) {
      return "stores";
    }
    if (spec_.require_call_count &&
        (o.call_counter != *spec_.require_call_count ||
         r.call_counter != o.call_counter)) {
      return "calls";
    }
    if (spec_.compare_memory) {
      const auto& mo = std::get<AbstractMemory>(o.memory);
      const auto& mr = std::get<AbstractMemory>(r.memory);
      std::set<uint64_t> keys;
      for (int k = 0; k < mo.num_cells; ++k) keys.insert(mo.cells[k].key);
      for (int k = 0; k < mr.num_cells; ++k) keys.insert(mr.cells[k].key);
      for (uint64_t key : keys) {
        if ((key >> 32) && !spec_.compare_stack_memory) continue;
        std::optional<uint32_t> initial;
        for (const auto& [k, var] : env.bindings()) {
          if (k == key) initial = env.values()[var];
        }
        auto vo = mo.Written(key);
        auto vr = mr.Written(key);
        if (!vo) vo = initial;
        if (!vr) vr = initial;
        if (vo != vr) return "memory";
      }
    }
    return "";
  }

  std::string Describe(int skip) const {
    std::string s = "skip " + (skip < 0 ? std::string("none")
                                        : std::to_string(skip)) + " at";
    for (int reg : inputs_) {
      s += " " + std::string(RegName(RegAt(reg))) + "=" +
           std::to_string(regs_[reg]);
    }
    s += " flags=" + std::to_string(flag_state_);
    return s;
  }

  void Fail(std::string why) {
    result_.passed = false;
    result_.failure = std::move(why);
  }

  const EquivalenceSpec& spec_;
    const uint32_t mask_;
  std::vector<std::string> symbols_;
  ExecContext original_;
  ExecContext replacement_;
  std::vector<int> inputs_;
  std::vector<int> interest_;
  uint8_t flags_ = 0;
  std::vector<uint8_t> flag_list_;
  int skips_ = 0;

  std::array<uint32_t, kNumRegs> regs_{};
  uint8_t flag_state_ = 0;
  OracleResult result_;
};

}  // namespace

OracleResult BruteForceCheck(const Sequence& original,
                             const Sequence& replacement,
                             const EquivalenceSpec& spec, int width) {
  return Checker(original, replacement, spec, width).Run();
}

}  // namespace skipshield::oracle
