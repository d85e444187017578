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
// Executable semantics of the supported Thumb-2 subset over W-bit registers.
//
// A sequence or program is first decoded into an ExecContext; a MachineState
// is then advanced one instruction at a time. Two memory models exist:
// AbstractMemory (stores are counted and remembered, loads from unwritten
// addresses draw fresh symbolic inputs from a shared LoadEnvironment) and
// ConcreteMemory (byte-addressed regions, out-of-region accesses fault).

#ifndef SKIPSHIELD_MACHINE_H_
#define SKIPSHIELD_MACHINE_H_

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "skipshield/asm.h"
#include "skipshield/base.h"

namespace skipshield {

constexpr int kMinWidth = 2;
constexpr int kMaxWidth = 32;

constexpr uint32_t WidthMask(int width) {
  return width >= 32 ? 0xffffffffu : (1u << width) - 1;
}

// Value read back by `mrs` for the given flags at width W: the five flags
// N Z C V Q occupy the top five bits (or as many as fit below W = 5).
uint32_t PackFlags(uint8_t flags, int width);
uint8_t UnpackFlags(uint32_t value, int width);

// Memory keys separate the stack (accesses based on sp) from data accesses,
// so spill slots below sp never alias data at small widths.
constexpr uint64_t MemKey(bool stack, uint32_t address) {
  return (static_cast<uint64_t>(stack) << 32) | address;
}

// Symbolic load inputs shared by every run from one initial state. The k-th
// distinct unwritten address that is loaded gets values()[k].
class LoadEnvironment {
 public:
  LoadEnvironment() = default;
  explicit LoadEnvironment(std::vector<uint32_t> values)
      : values_(std::move(values)) {}

  // Returns the input bound to `key`; binds the next free input on first
  // use. Sets overflow() and returns 0 when all inputs are taken.
  uint32_t Load(uint64_t key);
  // Resets the bindings but keeps the values.
  void Clear() { bindings_.clear(); overflow_ = false; }
  void set_values(std::vector<uint32_t> values) { values_ = std::move(values); }

  bool overflow() const { return overflow_; }
  const std::vector<uint32_t>& values() const { return values_; }
  const std::vector<std::pair<uint64_t, int>>& bindings() const {
    return bindings_;
  }

 private:
  std::vector<uint32_t> values_;
  std::vector<std::pair<uint64_t, int>> bindings_;
  bool overflow_ = false;
};

struct AbstractMemory {
  static constexpr int kMaxCells = 32;
  struct Cell {
    uint64_t key;
    uint32_t value;
  };

  AbstractMemory() = default;
  // Copies only the cells in use; states are copied once per fault scenario.
  AbstractMemory(const AbstractMemory& other) { *this = other; }
  AbstractMemory& operator=(const AbstractMemory& other) {
    env = other.env;
    num_cells = other.num_cells;
    std::copy(other.cells.begin(), other.cells.begin() + num_cells,
              cells.begin());
    return *this;
  }

  LoadEnvironment* env = nullptr;
  std::array<Cell, kMaxCells> cells;
  int num_cells = 0;

  // Value last stored at `key`, if any.
  std::optional<uint32_t> Written(uint64_t key) const;
};

class ConcreteMemory {
 public:
  struct Region {
    uint32_t base = 0;
    std::vector<uint8_t> bytes;
  };

  void AddRegion(uint32_t base, std::vector<uint8_t> bytes);
  const std::vector<Region>& regions() const { return regions_; }

  // Little-endian access; nullopt / false when any byte is unmapped.
  std::optional<uint32_t> Read(uint32_t address, int size) const;
  bool Write(uint32_t address, int size, uint32_t value);

 private:
  Region* Find(uint32_t address, int size);
  const Region* Find(uint32_t address, int size) const;

  std::vector<Region> regions_;
};

using Memory = std::variant<AbstractMemory, ConcreteMemory>;

enum class ExitKind : uint8_t {
  kRunning,
  kFallthrough,  // ran past the last instruction
  kLabel,        // branched to an external label (id = symbol index)
  kAddress,      // returned to an address outside the layout (id = address)
  kBadReturn,    // return to an address without the Thumb bit
};

struct Exit {
  ExitKind kind = ExitKind::kRunning;
  uint32_t id = 0;
  bool operator==(const Exit&) const = default;
};

struct ItQueue {
  std::array<Cond, 4> conds{};
  uint8_t head = 0;
  uint8_t size = 0;

  bool Empty() const { return size == 0; }
  Cond Pop() {
    --size;
    return conds[head++];
  }
};

struct MachineState {
  std::array<uint32_t, kNumRegs> regs{};
  uint8_t flags = 0;
  int pc = 0;  // index of the next decoded instruction
  bool fault_occurred = false;
  uint32_t store_counter = 0;
  uint32_t call_counter = 0;
  ItQueue it;
  // Set after a branch to a modeled function; the next step returns to lr.
  bool in_function = false;
  Exit exit;
  uint64_t steps = 0;            // transitions taken, including returns
  uint64_t executed = 0;         // instructions reached (dynamic index)

  // Bookkeeping used by the verifier.
  uint16_t undefined = 0;        // registers whose value is unspecified
  bool read_undefined = false;   // an unspecified register was read
  uint16_t written = 0;          // registers written at least once
  uint8_t flags_written = 0;
  uint16_t psr_tagged = 0;       // registers holding an exact `mrs` image
  std::array<uint8_t, kNumRegs> psr_tag{};

  Memory memory;

  bool Done() const { return exit.kind != ExitKind::kRunning; }
};

// One decoded instruction.
struct Op {
  enum class Op2 : uint8_t { kNone, kReg, kImm, kShifted };
  enum class Target : uint8_t { kNone, kInternal, kFunction, kExternal };

  Mnemonic m = Mnemonic::kNop;
  Cond cond = Cond::kAl;
  bool s = false;
  uint8_t rd = 0, rn = 0, rm = 0, ra = 0;
  Op2 op2 = Op2::kNone;
  ShiftKind shift = ShiftKind::kLsl;
  uint8_t shift_amount = 0;
  uint32_t imm = 0;  // already masked to W
  // Memory operand.
  uint8_t base = 0, index = 0, index_lsl = 0, size = 4;
  bool has_index = false;
  int64_t offset = 0;
  IndexMode mode = IndexMode::kOffset;
  uint16_t reglist = 0;
  bool writeback = false;
  Psr psr = Psr::kApsr;
  // Control flow.
  Target target = Target::kNone;
  int target_id = 0;        // op index, function id or symbol index
  uint32_t target_addr = 0; // address of the target point (adr)
  uint32_t next_addr = 0;   // return address of a bl (Thumb bit not set)
  std::array<Cond, 4> it_conds{};
  uint8_t it_slots = 0;
  int line = 0;
};

class ExecContext {
 public:
  // Layout for straight-line sequences checked by the verifier: every point
  // whose address is taken (adr targets, bl return points) gets address 2j
  // in order of appearance. Branches to `function_labels` are modeled calls;
  // other unknown labels are exits, identified by their index in `symbols`
  // (missing names are appended).
  static ExecContext ForSequence(std::span<const Item> items, int width,
                                 const std::set<std::string>& function_labels,
                                 std::vector<std::string>* symbols);
  // Layout for whole programs: instruction k lives at base + 4k.
  static ExecContext ForProgram(const Program& program, int width,
                                uint32_t base = 0x08000000);

  int width() const { return width_; }
  uint32_t mask() const { return mask_; }
  const std::vector<Op>& ops() const { return ops_; }
  size_t size() const { return ops_.size(); }
  // Op index of a label, or -1.
  int LabelIndex(const std::string& name) const;
  // Op index for an address in the layout, or -1.
  int IndexOfAddress(uint32_t address) const;

 private:
  int width_ = 4;
  uint32_t mask_ = 0xf;
  std::vector<Op> ops_;
  std::map<std::string, int> labels_;
  std::map<uint32_t, int> address_to_index_;
};

enum class RunStatus {
  kFinished,
  kNonTermination,
  kMemoryFault,
  kUnmodeled,
  kEnvOverflow,  // AbstractMemory ran out of symbolic inputs or cells
};

std::string_view RunStatusName(RunStatus s);

struct RunOptions {
  int skip_static = -1;        // skip the instruction at this op index
  int64_t skip_dynamic = -1;   // or the n-th executed instruction (0-based)
  uint64_t step_bound = 0;     // 0: 64 x number of ops
};

// Fresh state: all registers zero and defined, memory as given.
MachineState MakeState(Memory memory);

// Advances `s` by one transition in place. Returns false once the state is
// final. Throws Error(kMemoryFault) / Error(kUnmodeledInstruction).
bool StepInPlace(const ExecContext& ctx, MachineState& s,
                 const RunOptions& options = {});
// Pure wrapper over StepInPlace.
MachineState Step(const ExecContext& ctx, const MachineState& s);

// Runs until the state is final or the bound is hit. Never throws.
RunStatus Run(const ExecContext& ctx, MachineState& s,
              const RunOptions& options);

// Runs a copy of `s0`; throws Error(kNonTermination) and friends.
MachineState RunSequence(const ExecContext& ctx, MachineState s0,
                         std::optional<int> skip = std::nullopt,
                         uint64_t step_bound = 0);

// Flag results of the W-bit add-with-carry used by add/sub/adc/sbc/cmp.
struct AddResult {
  uint32_t value;
  bool carry;
  bool overflow;
};
AddResult AddWithCarry(uint32_t x, uint32_t y, bool carry_in, int width);

}  // namespace skipshield

#endif  // SKIPSHIELD_MACHINE_H_
