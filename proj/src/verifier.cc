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

#include "skipshield/verifier.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "skipshield/harden.h"
#include "skipshield/isa.h"
#include "skipshield/machine.h"

namespace skipshield {
namespace {

constexpr uint8_t kFlagOrder[] = {kFlagN, kFlagZ, kFlagC, kFlagV, kFlagQ};

std::string_view FlagLetter(uint8_t f) {
  switch (f) {
    case kFlagN: return "N";
    case kFlagZ: return "Z";
    case kFlagC: return "C";
    case kFlagV: return "V";
    default: return "Q";
  }
}

// Register effects as the machine model executes them: a modeled call only
// writes lr.
Effects ModelEffects(const Instruction& inst) {
  Effects e = EffectsOf(inst);
  if (inst.mnemonic == Mnemonic::kBl) {
    e.uses = RegSet{};
    e.defs = RegSet{Reg::kLr};
    e.flags_may_write = e.flags_must_write = 0;
  }
  return e;
}

struct Setup {
  std::vector<std::string> symbols;
  ExecContext original;
  ExecContext replacement;
  std::vector<Reg> input_regs;
  std::vector<uint8_t> input_flags;
  RegSet inputs;
  uint8_t input_flag_mask = 0;
  RegSet interest;
  std::vector<Reg> interest_regs;
  std::vector<std::optional<int>> scenarios;
  int width = 4;
};

Setup Prepare(const Sequence& original, const Sequence& replacement,
              const EquivalenceSpec& spec, int width) {
  if (width < kMinWidth || width > kMaxWidth) {
    throw Error(ErrorCode::kConfig,
                "width must be in [2, 32], got " + std::to_string(width));
  }
  Setup su;
  su.width = width;
  su.original = ExecContext::ForSequence(original, width,
                                         spec.function_labels, &su.symbols);
  su.replacement = ExecContext::ForSequence(
      replacement, width, spec.function_labels, &su.symbols);
  RegSet reads, referenced;
  uint8_t flags = 0;
  for (const Sequence* seq : {&original, &replacement}) {
    for (const Item& item : *seq) {
      const auto* inst = std::get_if<Instruction>(&item);
      if (inst == nullptr) continue;
      const Effects e = ModelEffects(*inst);
      reads |= e.uses;
      referenced |= e.uses | e.defs;
      flags |= e.flags_read;
    }
  }
  const RegSet excluded = spec.scratch | RegSet{Reg::kPc};
  su.inputs = reads - excluded;
  su.input_regs = su.inputs.ToVector();
  su.input_flag_mask = flags;
  for (uint8_t f : kFlagOrder) {
    if (flags & f) su.input_flags.push_back(f);
  }
  su.interest = spec.registers_of_interest.value_or(referenced) - excluded;
  su.interest_regs = su.interest.ToVector();
  su.scenarios = EnumerateFaultScenarios(replacement);
  return su;
}

MachineState Initial(const Setup& su, const EquivalenceSpec& spec,
                     const std::array<uint32_t, kNumRegs>& regs, uint8_t flags,
                     LoadEnvironment* env) {
  MachineState s;
  s.regs = regs;
  for (uint32_t& v : s.regs) v &= WidthMask(su.width);
  s.flags = flags;
  s.undefined = spec.scratch.mask();
  AbstractMemory mem;
  mem.env = env;
  s.memory = mem;
  return s;
}

// Initial value that makes an unread, one-sidedly written observable differ.
struct Patch {
  int reg = -1;
  uint8_t flag = 0;
  uint32_t value = 0;
};

std::string MemName(uint64_t key) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s0x%x]", (key >> 32) ? "mem[sp:" : "mem[",
                static_cast<uint32_t>(key));
  return buf;
}

std::optional<uint32_t> BoundLoad(const LoadEnvironment& env, uint64_t key) {
  for (const auto& [k, var] : env.bindings()) {
    if (k == key) return env.values()[var];
  }
  return std::nullopt;
}

std::optional<Mismatch> Compare(const Setup& su, const EquivalenceSpec& spec,
                                const MachineState& o, const MachineState& r,
                                bool faulted, const LoadEnvironment& env,
                                Patch* patch) {
  if (r.read_undefined || o.read_undefined) {
    return Mismatch{"undefined-read", o.read_undefined, r.read_undefined};
  }
  if (!(o.exit == r.exit)) {
    return Mismatch{"exit", o.exit.id, r.exit.id};
  }
  for (Reg reg : su.interest_regs) {
    const int i = Index(reg);
    const bool wo = (o.written >> i) & 1u, wr = (r.written >> i) & 1u;
    if (wo != wr && !su.inputs.Contains(reg)) {
      const uint32_t v = wo ? o.regs[i] : r.regs[i];
      if (patch) *patch = {i, 0, (v + 1) & WidthMask(su.width)};
      return Mismatch{std::string(RegName(reg)), o.regs[i], r.regs[i]};
    }
    if (o.regs[i] != r.regs[i]) {
      return Mismatch{std::string(RegName(reg)), o.regs[i], r.regs[i]};
    }
  }
  const bool flags = spec.compare_flags == FlagMode::kStrict ||
                     (spec.compare_flags == FlagMode::kRelaxed && !faulted);
  if (flags) {
    for (uint8_t f : kFlagOrder) {
      const bool wo = o.flags_written & f, wr = r.flags_written & f;
      const bool vo = o.flags & f, vr = r.flags & f;
      if (wo != wr && !(su.input_flag_mask & f)) {
        if (patch) *patch = {-1, f, static_cast<uint32_t>(!(wo ? vo : vr))};
        return Mismatch{"flag " + std::string(FlagLetter(f)), vo, vr};
      }
      if (vo != vr) {
        return Mismatch{"flag " + std::string(FlagLetter(f)), vo, vr};
      }
    }
  }
  if (spec.require_store_count && r.store_counter < o.store_counter) {
    return Mismatch{"store-count", o.store_counter, r.store_counter};
  }
  if (spec.require_call_count) {
    if (o.call_counter != *spec.require_call_count) {
      return Mismatch{"call-count", *spec.require_call_count, o.call_counter};
    }
    if (r.call_counter != o.call_counter) {
      return Mismatch{"call-count", o.call_counter, r.call_counter};
    }
  }
  if (spec.compare_memory) {
    const auto& mo = std::get<AbstractMemory>(o.memory);
    const auto& mr = std::get<AbstractMemory>(r.memory);
    std::vector<uint64_t> keys;
    for (int k = 0; k < mo.num_cells; ++k) keys.push_back(mo.cells[k].key);
    for (int k = 0; k < mr.num_cells; ++k) keys.push_back(mr.cells[k].key);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (uint64_t key : keys) {
      if ((key >> 32) && !spec.compare_stack_memory) continue;
      const auto initial = BoundLoad(env, key);
      const auto vo = mo.Written(key) ? mo.Written(key) : initial;
      const auto vr = mr.Written(key) ? mr.Written(key) : initial;
      if (vo != vr) return Mismatch{MemName(key), vo.value_or(0), vr.value_or(0)};
    }
  }
  return std::nullopt;
}

struct Failure {
  Property property = Property::kNone;
  std::optional<int> skip;
  Mismatch mismatch;
  Patch patch;
};

struct StateResult {
  bool overflow = false;
  std::optional<Failure> failure;
  uint32_t original_stores = 0;
  uint32_t min_stores = std::numeric_limits<uint32_t>::max();
  uint32_t max_stores = 0;
};

[[noreturn]] void ThrowUnmodeled(RunStatus status) {
  throw Error(ErrorCode::kUnmodeledInstruction,
              "execution stopped: " + std::string(RunStatusName(status)));
}

// Fault-free run of the replacement that also records the state on first
// reaching each static index. A skip of index k behaves as the fault-free
// run up to that point, so those scenarios resume from the snapshot.
RunStatus RunRecording(const ExecContext& ctx, MachineState& s,
                       std::vector<MachineState>& snaps,
                       std::vector<char>& seen) {
  const int n = static_cast<int>(ctx.size());
  const uint64_t bound = 64 * std::max<size_t>(1, ctx.size());
  seen.assign(n, 0);
  if (snaps.size() < static_cast<size_t>(n)) snaps.resize(n);
  try {
    if (!s.Done() && !s.in_function && s.pc >= n) {
      s.exit = {ExitKind::kFallthrough, 0};
    }
    while (!s.Done()) {
      if (s.steps >= bound) return RunStatus::kNonTermination;
      if (!s.in_function && s.pc < n && !seen[s.pc]) {
        seen[s.pc] = 1;
        snaps[s.pc] = s;
      }
      StepInPlace(ctx, s);
    }
  } catch (const Error& e) {
    return e.code() == ErrorCode::kMemoryFault ? RunStatus::kMemoryFault
                                               : RunStatus::kUnmodeled;
  }
  return RunStatus::kFinished;
}

StateResult Overflow() {
  StateResult r;
  r.overflow = true;
  return r;
}

StateResult CheckState(const Setup& su, const EquivalenceSpec& spec,
                       const MachineState& s0, LoadEnvironment& env) {
  thread_local std::vector<MachineState> snaps;
  thread_local std::vector<char> seen;
  StateResult result;
  MachineState o = s0;
  RunStatus st = Run(su.original, o, {});
  if (env.overflow()) return Overflow();
  if (st == RunStatus::kNonTermination) {
    result.failure = Failure{Property::kP1, std::nullopt,
                             {"termination", 0, 0}, {}};
    return result;
  }
  if (st != RunStatus::kFinished) ThrowUnmodeled(st);
  result.original_stores = o.store_counter;
  for (const auto& scenario : su.scenarios) {
    MachineState r;
    if (!scenario) {
      r = s0;
      st = RunRecording(su.replacement, r, snaps, seen);
    } else if (seen[*scenario]) {
      r = snaps[*scenario];
      RunOptions options;
      options.skip_static = *scenario;
      st = Run(su.replacement, r, options);
    } else {
      // Never reached: identical to the fault-free run, which passed.
      continue;
    }
    if (env.overflow()) return Overflow();
    if (st == RunStatus::kNonTermination) {
      result.failure = Failure{Property::kP2, scenario,
                               {"termination", 0, 0}, {}};
      return result;
    }
    if (st != RunStatus::kFinished) ThrowUnmodeled(st);
    result.min_stores = std::min(result.min_stores, r.store_counter);
    result.max_stores = std::max(result.max_stores, r.store_counter);
    Patch patch;
    if (auto mm = Compare(su, spec, o, r, scenario.has_value(), env, &patch)) {
      result.failure = Failure{Property::kP3, scenario, *mm, patch};
      return result;
    }
  }
  return result;
}

// Decodes an input index: flags in the low bits, then registers, then the
// symbolic loads.
struct Inputs {
  std::array<uint32_t, kNumRegs> regs{};
  uint8_t flags = 0;
  std::vector<uint32_t> loads;
};

Inputs Decode(const Setup& su, int loads, uint64_t index) {
  Inputs in;
  const uint32_t mask = WidthMask(su.width);
  for (uint8_t f : su.input_flags) {
    if (index & 1u) in.flags |= f;
    index >>= 1;
  }
  for (Reg r : su.input_regs) {
    in.regs[Index(r)] = static_cast<uint32_t>(index) & mask;
    index >>= su.width;
  }
  in.loads.resize(loads);
  for (int k = 0; k < loads; ++k) {
    in.loads[k] = static_cast<uint32_t>(index) & mask;
    index >>= su.width;
  }
  return in;
}

struct SearchResult {
  bool overflow = false;
  uint64_t explored = 0;
  std::optional<std::pair<uint64_t, Failure>> first_failure;  // ordinal
  std::optional<Inputs> failing_inputs;
  uint32_t original_stores = 0;
  uint32_t min_stores = std::numeric_limits<uint32_t>::max();
  uint32_t max_stores = 0;
};

// Scans ordinals [0, count); `index_of` maps an ordinal to an input index.
template <typename IndexOf>
SearchResult Search(const Setup& su, const EquivalenceSpec& spec, int loads,
                    uint64_t count, int threads, IndexOf index_of) {
  threads = std::max(1, threads);
  if (count < 4096) threads = 1;
  std::atomic<uint64_t> best{std::numeric_limits<uint64_t>::max()};
  std::atomic<bool> overflow{false};
  std::vector<SearchResult> partial(threads);
  auto worker = [&](int t) {
    SearchResult& out = partial[t];
    const uint64_t begin = count * t / threads;
    const uint64_t end = count * (t + 1) / threads;
    LoadEnvironment env;
    for (uint64_t ord = begin; ord < end; ++ord) {
      if (overflow.load(std::memory_order_relaxed) ||
          ord > best.load(std::memory_order_relaxed)) {
        return;
      }
      Inputs in = Decode(su, loads, index_of(ord));
      env.set_values(in.loads);
      env.Clear();
      const MachineState s0 = Initial(su, spec, in.regs, in.flags, &env);
      StateResult sr = CheckState(su, spec, s0, env);
      if (sr.overflow) {
        overflow = true;
        return;
      }
      ++out.explored;
      out.original_stores = std::max(out.original_stores, sr.original_stores);
      out.min_stores = std::min(out.min_stores, sr.min_stores);
      out.max_stores = std::max(out.max_stores, sr.max_stores);
      if (sr.failure) {
        out.first_failure = {ord, *sr.failure};
        out.failing_inputs = in;
        uint64_t cur = best.load();
        while (ord < cur && !best.compare_exchange_weak(cur, ord)) {
        }
        return;
      }
    }
  };
  std::vector<std::exception_ptr> errors(threads);
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          worker(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  SearchResult total;
  total.overflow = overflow;
  for (SearchResult& p : partial) {
    total.explored += p.explored;
    total.original_stores = std::max(total.original_stores, p.original_stores);
    total.min_stores = std::min(total.min_stores, p.min_stores);
    total.max_stores = std::max(total.max_stores, p.max_stores);
    if (p.first_failure && (!total.first_failure ||
                            p.first_failure->first < total.first_failure->first)) {
      total.first_failure = p.first_failure;
      total.failing_inputs = p.failing_inputs;
    }
  }
  return total;
}

std::optional<Mismatch> Replay(const Setup& su, const EquivalenceSpec& spec,
                               const Counterexample& cx) {
  LoadEnvironment env(cx.loads);
  const MachineState s0 = Initial(su, spec, cx.regs, cx.flags, &env);
  MachineState o = s0;
  RunStatus st = Run(su.original, o, {});
  if (st == RunStatus::kNonTermination) {
    return Mismatch{"termination", 0, 0};
  }
  if (st != RunStatus::kFinished) ThrowUnmodeled(st);
  MachineState r = s0;
  RunOptions options;
  options.skip_static = cx.skip.value_or(-1);
  st = Run(su.replacement, r, options);
  if (st == RunStatus::kNonTermination) {
    return Mismatch{"termination", 0, 0};
  }
  if (st != RunStatus::kFinished) ThrowUnmodeled(st);
  return Compare(su, spec, o, r, cx.skip.has_value(), env, nullptr);
}

}  // namespace

std::string_view FlagModeName(FlagMode mode) {
  switch (mode) {
    case FlagMode::kStrict: return "strict";
    case FlagMode::kRelaxed: return "relaxed";
    case FlagMode::kIgnore: return "ignore";
  }
  return "?";
}

std::string_view PropertyName(Property p) {
  switch (p) {
    case Property::kNone: return "none";
    case Property::kP1: return "P1";
    case Property::kP2: return "P2";
    case Property::kP3: return "P3";
  }
  return "?";
}

std::vector<std::optional<int>> EnumerateFaultScenarios(
    const Sequence& replacement) {
  std::vector<std::optional<int>> out = {std::nullopt};
  int n = 0;
  for (const Item& item : replacement) {
    if (std::holds_alternative<Instruction>(item)) out.push_back(n++);
  }
  return out;
}

Verdict CheckEquivalence(const Sequence& original, const Sequence& replacement,
                         const EquivalenceSpec& spec,
                         const VerifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const Setup su = Prepare(original, replacement, spec, options.width);
  const int w = options.width;
  Verdict verdict;
  verdict.scenarios = static_cast<int>(su.scenarios.size());

  for (int loads = 0;; ++loads) {
    const int log2 = static_cast<int>(su.input_flags.size()) +
                     w * static_cast<int>(su.input_regs.size() + loads);
    SearchResult result;
    if (log2 <= options.max_log2_states) {
      result = Search(su, spec, loads, uint64_t{1} << log2, options.threads,
                      [](uint64_t ord) { return ord; });
      verdict.exhaustive = true;
    } else if (options.sample_states > 0 && log2 <= 64) {
      // Pre-drawn so that every thread sees the same sequence.
      std::mt19937_64 rng(options.seed);
      std::vector<uint64_t> samples(options.sample_states);
      const uint64_t mask =
          log2 >= 64 ? ~uint64_t{0} : (uint64_t{1} << log2) - 1;
      for (uint64_t& s : samples) s = rng() & mask;
      result = Search(su, spec, loads, samples.size(), options.threads,
                      [&](uint64_t ord) { return samples[ord]; });
      verdict.exhaustive = false;
    } else {
      throw Error(ErrorCode::kStateSpaceTooLarge,
                  "2^" + std::to_string(log2) + " initial states exceed 2^" +
                      std::to_string(options.max_log2_states));
    }
    if (result.overflow) continue;

    verdict.symbolic_loads = loads;
    verdict.states_explored = result.explored;
    verdict.original_stores = result.original_stores;
    verdict.min_replacement_stores =
        result.explored ? result.min_stores : 0;
    verdict.max_replacement_stores = result.max_stores;
    if (result.first_failure) {
      const Failure& f = result.first_failure->second;
      const Inputs& in = *result.failing_inputs;
      Counterexample cx;
      cx.regs = in.regs;
      cx.flags = in.flags;
      cx.loads = in.loads;
      cx.skip = f.skip;
      if (f.patch.reg >= 0) cx.regs[f.patch.reg] = f.patch.value;
      if (f.patch.flag) {
        cx.flags = f.patch.value ? (cx.flags | f.patch.flag)
                                 : (cx.flags & ~f.patch.flag);
      }
      cx.mismatch = Replay(su, spec, cx).value_or(f.mismatch);
      verdict.passed = false;
      verdict.property_failed = f.property;
      verdict.counterexample = cx;
    }
    break;
  }
  verdict.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  return verdict;
}

Verdict CheckEquivalence(const Instruction& original,
                         const Sequence& replacement,
                         const EquivalenceSpec& spec,
                         const VerifyOptions& options) {
  return CheckEquivalence(Sequence{original}, replacement, spec, options);
}

std::optional<Mismatch> ReplayCounterexample(const Sequence& original,
                                             const Sequence& replacement,
                                             const EquivalenceSpec& spec,
                                             int width,
                                             const Counterexample& cx) {
  const Setup su = Prepare(original, replacement, spec, width);
  return Replay(su, spec, cx);
}

namespace {

RegAndFlags AllLive() { return {RegSet(0xffff), true}; }

ItBlock MakeItBlock(const std::string& text) {
  const Program p = ParseProgram(text);
  const auto insts = p.Instructions();
  ItBlock block;
  block.it = *insts[0];
  for (size_t k = 1; k < insts.size(); ++k) {
    block.slots.push_back(*insts[k]);
    block.live_in.push_back(AllLive());
    block.live_out.push_back(AllLive());
  }
  return block;
}

Sequence Items(const Program& p) { return p.items; }

}  // namespace

std::vector<CatalogEntry> BuiltinCatalog() {
  std::vector<CatalogEntry> out;
  auto add = [&](std::string name, std::string recipe, const std::string& text,
                 Sequence replacement, EquivalenceSpec spec,
                 bool expect_pass = true) {
    out.push_back({std::move(name), std::move(recipe),
                   Items(ParseProgram(text)), std::move(replacement),
                   std::move(spec), expect_pass});
  };
  auto scratch = [](std::initializer_list<Reg> regs) {
    EquivalenceSpec spec;
    spec.scratch = RegSet(regs);
    return spec;
  };
  auto dup = [&](std::string name, const std::string& text,
                 EquivalenceSpec spec = {}) {
    add(std::move(name), "duplicate", text,
        ReplaceIdempotent(ParseInstruction(text)), std::move(spec));
  };
  EquivalenceSpec stores;
  stores.require_store_count = true;

  dup("dup-mov", "mov r1, r8");
  dup("dup-ldr-reg-offset", "ldr r1, [r8, r2]");
  dup("dup-str-imm", "str r3, [r2, #10]", stores);
  dup("dup-str-reg", "str r3, [r1, r2]", stores);
  dup("dup-add", "add r3, r1, r2");
  dup("dup-cmp", "cmp r1, #9");
  dup("dup-b", "b target");
  dup("dup-beq", "beq target");
  dup("dup-bx-lr", "bx lr");

  const Reg r12 = Reg::kR12;
  add("overlap-add", "dest-overlaps-source", "add r1, r1, r3",
      ReplaceOverlapping(ParseInstruction("add r1, r1, r3"),
                         std::vector<Reg>{r12}),
      scratch({r12}));
  add("overlap-ldr", "dest-overlaps-source", "ldr r0, [r0]",
      ReplaceOverlapping(ParseInstruction("ldr r0, [r0]"),
                         std::vector<Reg>{Reg::kR2}),
      scratch({Reg::kR2}));
  add("overlap-eor", "dest-overlaps-source", "eor r5, r5, r5",
      ReplaceOverlapping(ParseInstruction("eor r5, r5, r5"),
                         std::vector<Reg>{Reg::kR4}),
      scratch({Reg::kR4}));

  add("stack-push", "stack-manipulation", "push {r1, r2, r3, lr}",
      ReplaceStackOp(ParseInstruction("push {r1, r2, r3, lr}"), r12),
      scratch({r12}));
  add("stack-pop", "stack-manipulation", "pop {r4, r5}",
      ReplaceStackOp(ParseInstruction("pop {r4, r5}"), r12), scratch({r12}));
  add("stack-push-single", "stack-manipulation", "push {r0}",
      ReplaceStackOp(ParseInstruction("push {r0}"), r12), scratch({r12}));

  EquivalenceSpec indexed = scratch({r12});
  indexed.require_store_count = true;
  add("pre-indexed-str", "pre/post-indexed-address", "str r1, [r2, #8]!",
      ReplacePrePostIndexed(ParseInstruction("str r1, [r2, #8]!"), r12),
      indexed);
  add("post-indexed-ldr", "pre/post-indexed-address", "ldr r1, [r2], #4",
      ReplacePrePostIndexed(ParseInstruction("ldr r1, [r2], #4"), r12),
      scratch({r12}));

  const std::array<Reg, 4> umlal_scratch = {Reg::kR4, Reg::kR5, Reg::kR6, r12};
  add("umlal", "umlal-split", "umlal r0, r1, r2, r3",
      ReplaceUmlal(ParseInstruction("umlal r0, r1, r2, r3"), umlal_scratch),
      scratch({Reg::kR4, Reg::kR5, Reg::kR6, r12}));

  add("rrx-subs", "rrx-flag-split", "subs r1, r2, r3, rrx",
      ReplaceRrx(ParseInstruction("subs r1, r2, r3, rrx"),
                 std::vector<Reg>{r12}),
      scratch({r12}));
  add("rrx-adds-overlap", "rrx-flag-split", "adds r1, r1, r3, rrx",
      ReplaceRrx(ParseInstruction("adds r1, r1, r3, rrx"),
                 std::vector<Reg>{r12, Reg::kR4}),
      scratch({r12, Reg::kR4}));

  EquivalenceSpec call = scratch({r12});
  call.function_labels = {"f"};
  call.require_call_count = 1;
  add("bl", "subroutine-call", "bl f",
      ReplaceBl(ParseInstruction("bl f"), r12, ".Lss0"), call);

  EquivalenceSpec relaxed = scratch({r12});
  relaxed.compare_flags = FlagMode::kRelaxed;
  add("adcs-relaxed", "flags-read-write", "adcs r1, r2, r3",
      ReplaceFlagsRw(ParseInstruction("adcs r1, r2, r3"),
                     std::vector<Reg>{r12}),
      relaxed);
  add("adcs-strict", "flags-read-write", "adcs r1, r2, r3",
      ReplaceFlagsRw(ParseInstruction("adcs r1, r2, r3"),
                     std::vector<Reg>{r12}),
      scratch({r12}), /*expect_pass=*/false);
  EquivalenceSpec relaxed2 = scratch({r12, Reg::kR4});
  relaxed2.compare_flags = FlagMode::kRelaxed;
  add("adcs-overlap-relaxed", "flags-read-write", "adcs r1, r1, r2",
      ReplaceFlagsRw(ParseInstruction("adcs r1, r1, r2"),
                     std::vector<Reg>{r12, Reg::kR4}),
      relaxed2);

  {
    // Every register live: the scratch register is spilled below sp.
    LabelAllocator labels;
    HardeningPolicy policy;
    Replacement r = HardenInstruction(ParseInstruction("add r1, r1, r3"),
                                      AllLive(), AllLive(), policy, labels);
    EquivalenceSpec spill;
    spill.compare_stack_memory = false;
    add("spill-add", "dest-overlaps-source", "add r1, r1, r3",
        std::move(r.items), spill);
  }

  const std::string it_block =
      "itte ne\naddne r1, r2, #10\neorne r3, r5, r1\nmoveq r3, #10\n";
  {
    LabelAllocator labels;
    HardeningPolicy policy;
    add("it-branch-expansion", "it-block", it_block,
        ExpandItBlock(MakeItBlock(it_block), policy, labels, nullptr), {});
  }
  {
    LabelAllocator labels;
    HardeningPolicy policy;
    policy.it_strategy = ItStrategy::kDuplicatedIt;
    add("it-duplicated-it", "it-block", it_block,
        ExpandItBlockDuplicated(MakeItBlock(it_block), policy, labels,
                                nullptr),
        {});
  }
  {
    const std::string single = "it eq\nmoveq r0, #1\n";
    LabelAllocator labels;
    HardeningPolicy policy;
    add("it-single-branch-expansion", "it-block", single,
        ExpandItBlock(MakeItBlock(single), policy, labels, nullptr), {});
  }
  return out;
}

std::vector<CatalogResult> VerifyCatalog(const VerifyOptions& options,
                                         const std::string& filter) {
  std::vector<CatalogResult> results;
  for (CatalogEntry& entry : BuiltinCatalog()) {
    if (!filter.empty() && entry.name.find(filter) == std::string::npos &&
        entry.recipe.find(filter) == std::string::npos) {
      continue;
    }
    CatalogResult r;
    r.name = entry.name;
    r.recipe = entry.recipe;
    r.expect_pass = entry.expect_pass;
    try {
      r.verdict = CheckEquivalence(entry.original, entry.replacement,
                                   entry.spec, options);
    } catch (const Error& e) {
      r.verdict.passed = false;
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace skipshield
