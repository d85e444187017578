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

#include "skipshield/report.h"

#include <cmath>
#include <set>

#include "json.hpp"
#include "skipshield/isa.h"

namespace skipshield {
namespace {

using nlohmann::json;

bool Low(Reg r) { return Index(r) < 8; }

bool LowReg(const Instruction& inst, size_t k) {
  return inst.IsReg(k) && Low(inst.RegAt(k));
}

std::optional<int64_t> Imm(const Instruction& inst, size_t k) {
  if (const auto* imm = inst.Get<Immediate>(k)) return imm->value;
  return std::nullopt;
}

bool InRange(std::optional<int64_t> v, int64_t lo, int64_t hi,
             int64_t align = 1) {
  return v && *v >= lo && *v <= hi && *v % align == 0;
}

// Narrow data-processing forms of `op rd, rn, <operand>`.
bool NarrowDataProcessing(const Instruction& inst) {
  const Mnemonic m = inst.mnemonic;
  const size_t n = inst.operands.size();
  if (n == 3 && inst.Get<ShiftedRegister>(2) != nullptr) return false;
  switch (m) {
    case Mnemonic::kMov:
      if (inst.IsReg(1)) return true;  // high-register form included
      return LowReg(inst, 0) && InRange(Imm(inst, 1), 0, 255);
    case Mnemonic::kMvn:
      return LowReg(inst, 0) && LowReg(inst, 1);
    case Mnemonic::kCmp:
      if (inst.IsReg(1)) return inst.IsReg(0);
      return LowReg(inst, 0) && InRange(Imm(inst, 1), 0, 255);
    case Mnemonic::kCmn:
    case Mnemonic::kTst:
      return LowReg(inst, 0) && LowReg(inst, 1);
    case Mnemonic::kTeq:
      return false;
    case Mnemonic::kAdd:
    case Mnemonic::kSub: {
      const Reg rd = inst.RegAt(0);
      const Reg rn = inst.RegAt(1);
      if (inst.IsReg(2)) {
        if (Low(rd) && Low(rn) && LowReg(inst, 2)) return true;
        // add rdn, rm with any registers, flags untouched.
        return m == Mnemonic::kAdd && rd == rn && !inst.sets_flags;
      }
      const auto imm = Imm(inst, 2);
      if (rn == Reg::kSp) {
        if (rd == Reg::kSp) return InRange(imm, 0, 508, 4);
        return m == Mnemonic::kAdd && Low(rd) && InRange(imm, 0, 1020, 4);
      }
      if (!Low(rd) || !Low(rn)) return false;
      return InRange(imm, 0, 7) || (rd == rn && InRange(imm, 0, 255));
    }
    case Mnemonic::kRsb:
      return LowReg(inst, 0) && LowReg(inst, 1) && InRange(Imm(inst, 2), 0, 0);
    case Mnemonic::kLsl:
    case Mnemonic::kLsr:
    case Mnemonic::kAsr:
      if (!LowReg(inst, 0) || !LowReg(inst, 1)) return false;
      if (inst.IsReg(2)) return inst.RegAt(0) == inst.RegAt(1) && LowReg(inst, 2);
      return InRange(Imm(inst, 2), 0, 32);
    case Mnemonic::kRor:
      return LowReg(inst, 0) && inst.IsReg(2) &&
             inst.RegAt(0) == inst.RegAt(1) && LowReg(inst, 2);
    case Mnemonic::kMul:
      // muls rdm, rn, rdm
      return LowReg(inst, 0) && LowReg(inst, 1) && LowReg(inst, 2) &&
             (inst.RegAt(0) == inst.RegAt(1) || inst.RegAt(0) == inst.RegAt(2));
    case Mnemonic::kAdc:
    case Mnemonic::kSbc:
    case Mnemonic::kAnd:
    case Mnemonic::kOrr:
    case Mnemonic::kEor:
    case Mnemonic::kBic:
      return LowReg(inst, 0) && LowReg(inst, 1) && LowReg(inst, 2) &&
             inst.RegAt(0) == inst.RegAt(1);
    default:
      return false;
  }
}

bool NarrowLoadStore(const Instruction& inst) {
  const auto* mem = inst.Get<MemRef>(1);
  if (mem == nullptr || !LowReg(inst, 0)) return false;
  if (mem->mode != IndexMode::kOffset) return false;
  if (mem->index) return Low(mem->base) && Low(*mem->index) && mem->index_lsl == 0;
  const int64_t imm = mem->imm.value_or(0);
  switch (inst.mnemonic) {
    case Mnemonic::kLdr:
    case Mnemonic::kStr:
      if (mem->base == Reg::kSp) return InRange(imm, 0, 1020, 4);
      return Low(mem->base) && InRange(imm, 0, 124, 4);
    case Mnemonic::kLdrh:
    case Mnemonic::kStrh:
      return Low(mem->base) && InRange(imm, 0, 62, 2);
    case Mnemonic::kLdrb:
    case Mnemonic::kStrb:
      return Low(mem->base) && InRange(imm, 0, 31);
    default:
      return false;
  }
}

bool NarrowMultiple(const Instruction& inst) {
  const auto* list = [&]() -> const RegisterList* {
    for (size_t k = 0; k < inst.operands.size(); ++k) {
      if (const auto* l = inst.Get<RegisterList>(k)) return l;
    }
    return nullptr;
  }();
  if (list == nullptr) return false;
  const RegSet low(0x00ff);
  switch (inst.mnemonic) {
    case Mnemonic::kPush:
      return (list->regs - low - RegSet{Reg::kLr}).Empty();
    case Mnemonic::kPop:
      return (list->regs - low - RegSet{Reg::kPc}).Empty();
    case Mnemonic::kLdmia:
    case Mnemonic::kStmia: {
      const auto* base = inst.Get<RegOperand>(0);
      if (base == nullptr || !Low(base->reg) || !(list->regs - low).Empty()) {
        return false;
      }
      // Narrow stm always writes back; narrow ldm writes back unless the
      // base is loaded.
      const bool base_loaded = list->regs.Contains(base->reg);
      if (inst.mnemonic == Mnemonic::kStmia) return base->writeback;
      return base->writeback != base_loaded;
    }
    default:
      return false;
  }
}

int ListSize(const Instruction& inst) {
  for (size_t k = 0; k < inst.operands.size(); ++k) {
    if (const auto* l = inst.Get<RegisterList>(k)) return l->regs.Size();
  }
  return 0;
}

ScopeOverhead MakeScope(int64_t oi, int64_t hi, int64_t ob, int64_t hb,
                        int64_t oc, int64_t hc) {
  ScopeOverhead s;
  s.instructions = {oi, hi, IncreasePercent(oi, hi)};
  s.code_bytes = {ob, hb, IncreasePercent(ob, hb)};
  s.cycles = {oc, hc, IncreasePercent(oc, hc)};
  return s;
}

json MetricJson(const Metric& m) {
  return {{"original", m.original},
          {"hardened", m.hardened},
          {"increase_percent", m.increase_percent}};
}

json ScopeJson(const ScopeOverhead& s) {
  return {{"instruction_count", MetricJson(s.instructions)},
          {"code_bytes_estimate", MetricJson(s.code_bytes)},
          {"cycles_estimate", MetricJson(s.cycles)}};
}

}  // namespace

int EstimateEncodingBytes(const Instruction& inst) {
  if (inst.qualifier == WidthQualifier::kWide) return 4;
  if (inst.qualifier == WidthQualifier::kNarrow) return 2;
  switch (inst.mnemonic) {
    case Mnemonic::kIt:
    case Mnemonic::kNop:
    case Mnemonic::kB:
    case Mnemonic::kBx:
      return 2;
    case Mnemonic::kBl:
    case Mnemonic::kMrs:
    case Mnemonic::kMsr:
    case Mnemonic::kUmull:
    case Mnemonic::kUmlal:
    case Mnemonic::kRrx:
    case Mnemonic::kLdmdb:
    case Mnemonic::kStmdb:
      return 4;
    case Mnemonic::kAdr:
      return LowReg(inst, 0) ? 2 : 4;
    case Mnemonic::kLdr:
    case Mnemonic::kStr:
    case Mnemonic::kLdrb:
    case Mnemonic::kStrb:
    case Mnemonic::kLdrh:
    case Mnemonic::kStrh:
      return NarrowLoadStore(inst) ? 2 : 4;
    case Mnemonic::kPush:
    case Mnemonic::kPop:
    case Mnemonic::kLdmia:
    case Mnemonic::kStmia:
      return NarrowMultiple(inst) ? 2 : 4;
    default:
      return NarrowDataProcessing(inst) ? 2 : 4;
  }
}

CycleModel ParseCycleModel(std::string_view json_text) {
  CycleModel model;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) {
      throw Error(ErrorCode::kConfig, "cycle model must be a JSON object");
    }
    const std::pair<const char*, int*> fields[] = {
        {"alu", &model.alu},
        {"load_store", &model.load_store},
        {"multiple_base", &model.multiple_base},
        {"multiple_per_register", &model.multiple_per_register},
        {"branch", &model.branch},
        {"psr", &model.psr},
    };
    std::set<std::string> known;
    for (const auto& [name, field] : fields) {
      known.insert(name);
      if (j.contains(name)) *field = j[name].get<int>();
    }
    for (const auto& [name, value] : j.items()) {
      if (!known.count(name)) {
        throw Error(ErrorCode::kConfig,
                    "unknown cycle model field '" + name + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("cycle model: ") + e.what());
  }
  return model;
}

int EstimateCycles(const Instruction& inst, const CycleModel& model) {
  const Mnemonic m = inst.mnemonic;
  if (IsBranch(m)) return model.branch;
  if (IsLoadStoreMultiple(m)) {
    return model.multiple_base + model.multiple_per_register * ListSize(inst);
  }
  if (IsLoad(m) || IsStore(m)) return model.load_store;
  if (m == Mnemonic::kMrs || m == Mnemonic::kMsr) return model.psr;
  return model.alu;
}

double IncreasePercent(int64_t original, int64_t hardened) {
  if (original == 0) return 0;
  const double p = 100.0 * static_cast<double>(hardened - original) /
                   static_cast<double>(original);
  return std::round(p * 10.0) / 10.0;
}

OverheadReport MeasureOverhead(const Program& original,
                               const Program& hardened,
                               const HardeningReport& report,
                               const CycleModel& model) {
  const auto orig = original.Instructions();
  const auto hard = hardened.Instructions();
  int64_t replacement = 0;
  for (const auto& r : report.records) replacement += r.replacement_length;
  if (static_cast<int>(orig.size()) != report.original_total ||
      static_cast<int>(hard.size()) != report.hardened_total ||
      static_cast<int>(report.records.size()) != report.original_in_scope ||
      replacement != report.hardened_in_scope ||
      report.original_total - report.original_in_scope !=
          report.hardened_total - report.hardened_in_scope) {
    throw Error(ErrorCode::kMismatchedPrograms,
                "hardening report does not describe these programs");
  }

  // Out-of-scope instructions are copied unchanged, so their cost is the
  // same on both sides.
  std::set<int> scoped_lines;
  for (const auto& r : report.records) scoped_lines.insert(r.line);
  int64_t ob = 0, oc = 0, out_b = 0, out_c = 0;
  for (const Instruction* inst : orig) {
    const int b = EstimateEncodingBytes(*inst);
    const int c = EstimateCycles(*inst, model);
    ob += b;
    oc += c;
    if (!scoped_lines.count(inst->line)) {
      out_b += b;
      out_c += c;
    }
  }
  int64_t hb = 0, hc = 0;
  for (const Instruction* inst : hard) {
    hb += EstimateEncodingBytes(*inst);
    hc += EstimateCycles(*inst, model);
  }

  OverheadReport out;
  out.program = MakeScope(report.original_total, report.hardened_total, ob,
                          hb, oc, hc);
  out.in_scope = MakeScope(report.original_in_scope, report.hardened_in_scope,
                           ob - out_b, hb - out_b, oc - out_c, hc - out_c);
  for (const auto& r : report.records) {
    RecipeOverhead& ro =
        out.recipes[std::string(RecipeName(r.classification.recipe))];
    ++ro.instances;
    ++ro.original_instructions;
    ro.replacement_instructions += r.replacement_length;
  }
  return out;
}

std::string OverheadReportToJson(const OverheadReport& report) {
  json j;
  j["estimates"] = "static; cycles from the configured cycle model";
  j["program"] = ScopeJson(report.program);
  j["in_scope"] = ScopeJson(report.in_scope);
  json recipes = json::object();
  for (const auto& [name, r] : report.recipes) {
    recipes[name] = {{"instances", r.instances},
                     {"original_instructions", r.original_instructions},
                     {"replacement_instructions", r.replacement_instructions}};
  }
  j["recipes"] = std::move(recipes);
  return j.dump(2);
}

}  // namespace skipshield
