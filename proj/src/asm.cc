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

#include "skipshield/asm.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <deque>
#include <map>
#include <sstream>

namespace skipshield {
namespace {

struct MnemonicInfo {
  std::string_view spelling;
  Mnemonic mnemonic;
  bool allow_s;
};

// Longest spellings first so that prefix matching prefers "ldrb" over "ldr"
// and "bl" over "b".
const std::vector<MnemonicInfo>& MnemonicTable() {
  static const std::vector<MnemonicInfo> table = [] {
    std::vector<MnemonicInfo> t = {
        {"adc", Mnemonic::kAdc, true},     {"add", Mnemonic::kAdd, true},
        {"adr", Mnemonic::kAdr, false},    {"and", Mnemonic::kAnd, true},
        {"asr", Mnemonic::kAsr, true},     {"b", Mnemonic::kB, false},
        {"bic", Mnemonic::kBic, true},     {"bl", Mnemonic::kBl, false},
        {"bx", Mnemonic::kBx, false},      {"cmn", Mnemonic::kCmn, false},
        {"cmp", Mnemonic::kCmp, false},    {"eor", Mnemonic::kEor, true},
        {"ldmdb", Mnemonic::kLdmdb, false}, {"ldmea", Mnemonic::kLdmdb, false},
        {"ldmia", Mnemonic::kLdmia, false}, {"ldmfd", Mnemonic::kLdmia, false},
        {"ldm", Mnemonic::kLdmia, false},  {"ldr", Mnemonic::kLdr, false},
        {"ldrb", Mnemonic::kLdrb, false},  {"ldrh", Mnemonic::kLdrh, false},
        {"lsl", Mnemonic::kLsl, true},     {"lsr", Mnemonic::kLsr, true},
        {"mov", Mnemonic::kMov, true},     {"mrs", Mnemonic::kMrs, false},
        {"msr", Mnemonic::kMsr, false},    {"mul", Mnemonic::kMul, true},
        {"mvn", Mnemonic::kMvn, true},     {"nop", Mnemonic::kNop, false},
        {"orr", Mnemonic::kOrr, true},     {"pop", Mnemonic::kPop, false},
        {"push", Mnemonic::kPush, false},  {"ror", Mnemonic::kRor, true},
        {"rrx", Mnemonic::kRrx, true},     {"rsb", Mnemonic::kRsb, true},
        {"sbc", Mnemonic::kSbc, true},     {"stmdb", Mnemonic::kStmdb, false},
        {"stmfd", Mnemonic::kStmdb, false}, {"stmia", Mnemonic::kStmia, false},
        {"stmea", Mnemonic::kStmia, false}, {"stm", Mnemonic::kStmia, false},
        {"str", Mnemonic::kStr, false},    {"strb", Mnemonic::kStrb, false},
        {"strh", Mnemonic::kStrh, false},  {"sub", Mnemonic::kSub, true},
        {"teq", Mnemonic::kTeq, false},    {"tst", Mnemonic::kTst, false},
        {"umlal", Mnemonic::kUmlal, false}, {"umull", Mnemonic::kUmull, false},
    };
    std::stable_sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
      return a.spelling.size() > b.spelling.size();
    });
    return t;
  }();
  return table;
}

// Coprocessor and external-synchronization instructions: no fault-tolerant
// replacement exists for them.
constexpr std::array<std::string_view, 16> kRejectedSpecific = {
    "mcr", "mcr2", "mrc", "mrc2", "mcrr", "mrrc", "cdp", "cdp2",
    "ldc", "stc", "lcr", "sev", "yield", "svc", "wfe", "wfi",
};

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '$';
}

bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '$';
}

bool IsIdentifier(std::string_view s) {
  if (s.empty() || !IsIdentStart(s[0])) return false;
  return std::all_of(s.begin(), s.end(), IsIdentChar);
}

bool IsRejectedSpecific(std::string_view base) {
  for (std::string_view r : kRejectedSpecific) {
    if (base == r) return true;
    if (base.size() == r.size() + 2 && base.substr(0, r.size()) == r &&
        ParseCond(base.substr(r.size()))) {
      return true;
    }
  }
  return false;
}

[[noreturn]] void Fail(int line, const std::string& message) {
  throw Error(ErrorCode::kSyntax, message, line);
}

struct ParsedMnemonic {
  Mnemonic mnemonic;
  Cond cond = Cond::kAl;
  bool sets_flags = false;
  WidthQualifier qualifier = WidthQualifier::kNone;
  std::optional<std::string> it_mask;
};

ParsedMnemonic ParseMnemonic(std::string_view raw, int line) {
  std::string text = Lower(raw);
  ParsedMnemonic out{};
  std::optional<Cond> dot_cond;
  if (size_t dot = text.find('.'); dot != std::string::npos) {
    const std::string suffix = text.substr(dot + 1);
    text.resize(dot);
    if (suffix == "w") {
      out.qualifier = WidthQualifier::kWide;
    } else if (suffix == "n") {
      out.qualifier = WidthQualifier::kNarrow;
    } else if (auto c = ParseCond(suffix); c && text == "b") {
      dot_cond = c;  // `b.eq` spelling
    } else {
      Fail(line, "unknown mnemonic qualifier '." + suffix + "'");
    }
  }

  if (text.size() >= 2 && text.substr(0, 2) == "it") {
    const std::string mask = text.substr(2);
    if (mask.size() <= 3 &&
        std::all_of(mask.begin(), mask.end(),
                    [](char c) { return c == 't' || c == 'e'; })) {
      out.mnemonic = Mnemonic::kIt;
      out.it_mask = mask;
      return out;
    }
  }

  for (const MnemonicInfo& info : MnemonicTable()) {
    if (text.compare(0, info.spelling.size(), info.spelling) != 0) continue;
    std::string_view rest = std::string_view(text).substr(info.spelling.size());
    bool s = false;
    if (info.allow_s && !rest.empty() && rest[0] == 's') {
      s = true;
      rest.remove_prefix(1);
    }
    std::optional<Cond> cond = Cond::kAl;
    if (!rest.empty()) cond = ParseCond(rest);
    if (!cond) continue;
    out.mnemonic = info.mnemonic;
    out.sets_flags = s;
    out.cond = *cond;
    if (dot_cond) {
      if (out.cond != Cond::kAl) Fail(line, "duplicate condition code");
      out.cond = *dot_cond;
    }
    return out;
  }

  if (IsRejectedSpecific(text)) {
    throw Error(ErrorCode::kUnsupportedInstruction,
                "instruction '" + text +
                    "' has no fault-tolerant replacement "
                    "(coprocessor or external synchronization)",
                line);
  }
  throw Error(ErrorCode::kUnsupportedInstruction,
              "unknown or unsupported mnemonic '" + text + "'", line);
}

// Splits on commas that are not nested in [] or {}.
std::vector<std::string_view> SplitOperands(std::string_view s, int line) {
  std::vector<std::string_view> out;
  int depth = 0;
  size_t start = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '[' || c == '{') ++depth;
    if (c == ']' || c == '}') --depth;
    if (depth < 0) Fail(line, "unbalanced brackets");
    if (c == ',' && depth == 0) {
      out.push_back(Trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (depth != 0) Fail(line, "unbalanced brackets");
  std::string_view last = Trim(s.substr(start));
  if (!last.empty() || !out.empty()) out.push_back(last);
  for (std::string_view piece : out) {
    if (piece.empty()) Fail(line, "empty operand");
  }
  return out;
}

int64_t ParseImmediateText(std::string_view text, int line) {
  text = Trim(text);
  if (text.empty() || text[0] != '#') Fail(line, "expected immediate");
  const std::string body(Trim(text.substr(1)));
  if (body.empty()) Fail(line, "empty immediate");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(body.c_str(), &end, 0);
  if (errno != 0 || *end != '\0') Fail(line, "bad immediate '" + body + "'");
  if (v < INT32_MIN || v > static_cast<long long>(UINT32_MAX)) {
    Fail(line, "immediate out of range");
  }
  return v;
}

Reg ExpectReg(std::string_view text, int line) {
  auto r = ParseReg(Trim(text));
  if (!r) Fail(line, "expected register, got '" + std::string(text) + "'");
  return *r;
}

// Pseudo operand produced for a bare "lsl #2" / "rrx" piece.
struct ShiftPiece {
  ShiftKind kind;
  int amount;
};

std::optional<ShiftPiece> ParseShiftPiece(std::string_view piece, int line) {
  const std::string t = Lower(Trim(piece));
  static const std::map<std::string, ShiftKind, std::less<>> kinds = {
      {"lsl", ShiftKind::kLsl}, {"lsr", ShiftKind::kLsr},
      {"asr", ShiftKind::kAsr}, {"ror", ShiftKind::kRor},
      {"rrx", ShiftKind::kRrx}};
  if (t == "rrx") return ShiftPiece{ShiftKind::kRrx, 0};
  if (t.size() < 4 || !std::isspace(static_cast<unsigned char>(t[3]))) {
    return std::nullopt;
  }
  auto it = kinds.find(t.substr(0, 3));
  if (it == kinds.end() || it->second == ShiftKind::kRrx) return std::nullopt;
  const int64_t amount = ParseImmediateText(t.substr(4), line);
  return ShiftPiece{it->second, static_cast<int>(amount)};
}

void CheckShiftAmount(ShiftKind kind, int64_t amount, int line) {
  bool ok = true;
  switch (kind) {
    case ShiftKind::kLsl: ok = amount >= 0 && amount <= 31; break;
    case ShiftKind::kLsr:
    case ShiftKind::kAsr: ok = amount >= 1 && amount <= 32; break;
    case ShiftKind::kRor: ok = amount >= 1 && amount <= 31; break;
    case ShiftKind::kRrx: ok = amount == 0; break;
  }
  if (!ok) Fail(line, "shift amount out of range");
}

MemRef ParseMemRef(std::string_view piece, int line) {
  MemRef mem;
  const size_t close = piece.rfind(']');
  if (close == std::string_view::npos) Fail(line, "missing ']'");
  std::string_view after = Trim(piece.substr(close + 1));
  if (after == "!") {
    mem.mode = IndexMode::kPreIndexed;
  } else if (!after.empty()) {
    Fail(line, "unexpected text after memory operand");
  }
  auto parts = SplitOperands(piece.substr(1, close - 1), line);
  if (parts.empty() || parts.size() > 3) Fail(line, "bad memory operand");
  mem.base = ExpectReg(parts[0], line);
  if (parts.size() >= 2) {
    if (parts[1][0] == '#') {
      if (parts.size() == 3) Fail(line, "shift on immediate offset");
      mem.imm = static_cast<int32_t>(ParseImmediateText(parts[1], line));
    } else {
      mem.index = ExpectReg(parts[1], line);
      if (parts.size() == 3) {
        auto shift = ParseShiftPiece(parts[2], line);
        if (!shift || shift->kind != ShiftKind::kLsl || shift->amount > 3) {
          Fail(line, "index shift must be lsl #0-3");
        }
        mem.index_lsl = static_cast<uint8_t>(shift->amount);
      }
    }
  }
  if (mem.mode == IndexMode::kPreIndexed && !mem.imm) {
    Fail(line, "pre-indexed addressing needs an immediate offset");
  }
  return mem;
}

RegisterList ParseRegList(std::string_view piece, int line) {
  if (piece.back() != '}') Fail(line, "missing '}'");
  RegisterList list;
  for (std::string_view part : SplitOperands(piece.substr(1, piece.size() - 2),
                                             line)) {
    if (size_t dash = part.find('-'); dash != std::string_view::npos) {
      const int lo = Index(ExpectReg(part.substr(0, dash), line));
      const int hi = Index(ExpectReg(part.substr(dash + 1), line));
      if (lo > hi) Fail(line, "bad register range");
      for (int r = lo; r <= hi; ++r) list.regs.Insert(RegAt(r));
    } else {
      list.regs.Insert(ExpectReg(part, line));
    }
  }
  if (list.regs.Empty()) Fail(line, "empty register list");
  return list;
}

std::optional<Psr> ParsePsr(std::string_view text) {
  const std::string t = Lower(text);
  if (t == "apsr") return Psr::kApsr;
  if (t == "apsr_nzcvq") return Psr::kApsrNzcvq;
  if (t == "apsr_nzcv") return Psr::kApsrNzcv;
  return std::nullopt;
}

using Piece = std::variant<Operand, ShiftPiece>;

Piece ParsePiece(std::string_view piece, int line) {
  if (piece[0] == '#') return Operand(Immediate{ParseImmediateText(piece, line)});
  if (piece[0] == '[') return Operand(ParseMemRef(piece, line));
  if (piece[0] == '{') return Operand(ParseRegList(piece, line));
  if (auto shift = ParseShiftPiece(piece, line)) return *shift;
  bool writeback = false;
  std::string_view name = piece;
  if (name.back() == '!') {
    writeback = true;
    name = Trim(name.substr(0, name.size() - 1));
  }
  if (auto r = ParseReg(name)) return Operand(RegOperand{*r, writeback});
  if (writeback) Fail(line, "writeback on non-register");
  if (auto p = ParsePsr(name)) return Operand(SpecialReg{*p});
  if (IsIdentifier(name)) return Operand(LabelRef{std::string(name)});
  Fail(line, "cannot parse operand '" + std::string(piece) + "'");
}

std::vector<Operand> ParseOperands(std::string_view text, int line) {
  std::vector<Operand> ops;
  for (std::string_view piece : SplitOperands(text, line)) {
    Piece p = ParsePiece(piece, line);
    if (auto* shift = std::get_if<ShiftPiece>(&p)) {
      if (ops.empty() || !std::holds_alternative<RegOperand>(ops.back()) ||
          std::get<RegOperand>(ops.back()).writeback) {
        Fail(line, "shift must follow a register operand");
      }
      CheckShiftAmount(shift->kind, shift->amount, line);
      const Reg r = std::get<RegOperand>(ops.back()).reg;
      ops.back() = ShiftedRegister{r, shift->kind,
                                   static_cast<uint8_t>(shift->amount)};
      continue;
    }
    Operand op = std::get<Operand>(std::move(p));
    // `[rn], #imm` is post-indexed addressing.
    if (std::holds_alternative<Immediate>(op) && !ops.empty()) {
      if (auto* mem = std::get_if<MemRef>(&ops.back());
          mem && mem->mode == IndexMode::kOffset && !mem->imm && !mem->index) {
        mem->imm = static_cast<int32_t>(std::get<Immediate>(op).value);
        mem->mode = IndexMode::kPostIndexed;
        continue;
      }
    }
    ops.push_back(std::move(op));
  }
  return ops;
}

bool IsPlainReg(const Operand& op) {
  auto* r = std::get_if<RegOperand>(&op);
  return r && !r->writeback;
}

bool IsOperand2(const Operand& op) {
  return IsPlainReg(op) || std::holds_alternative<Immediate>(op) ||
         std::holds_alternative<ShiftedRegister>(op);
}

void ExpectCount(const Instruction& inst, size_t n, int line) {
  if (inst.operands.size() != n) {
    std::ostringstream msg;
    msg << "'" << MnemonicName(inst.mnemonic) << "' expects " << n
        << " operands, got " << inst.operands.size();
    Fail(line, msg.str());
  }
}

void ExpectRegs(const Instruction& inst, std::initializer_list<size_t> idx,
                int line) {
  for (size_t k : idx) {
    if (!IsPlainReg(inst.operands[k])) {
      Fail(line, "operand " + std::to_string(k + 1) + " of '" +
                     std::string(MnemonicName(inst.mnemonic)) +
                     "' must be a register");
    }
  }
}

// Checks the operand signature and normalizes the two-operand shorthands to
// their three-operand form.
void ValidateOperands(Instruction& inst, int line) {
  auto& ops = inst.operands;
  switch (inst.mnemonic) {
    case Mnemonic::kMov:
    case Mnemonic::kMvn:
    case Mnemonic::kCmp:
    case Mnemonic::kCmn:
    case Mnemonic::kTst:
    case Mnemonic::kTeq:
      ExpectCount(inst, 2, line);
      ExpectRegs(inst, {0}, line);
      if (!IsOperand2(ops[1])) Fail(line, "bad second operand");
      break;
    case Mnemonic::kAdd:
    case Mnemonic::kSub:
    case Mnemonic::kRsb:
    case Mnemonic::kAdc:
    case Mnemonic::kSbc:
    case Mnemonic::kAnd:
    case Mnemonic::kOrr:
    case Mnemonic::kEor:
    case Mnemonic::kBic:
      if (ops.size() == 2) ops.insert(ops.begin() + 1, ops[0]);
      ExpectCount(inst, 3, line);
      ExpectRegs(inst, {0, 1}, line);
      if (!IsOperand2(ops[2])) Fail(line, "bad third operand");
      break;
    case Mnemonic::kMul:
      if (ops.size() == 2) ops.insert(ops.begin() + 1, ops[0]);
      ExpectCount(inst, 3, line);
      ExpectRegs(inst, {0, 1, 2}, line);
      break;
    case Mnemonic::kUmull:
    case Mnemonic::kUmlal:
      ExpectCount(inst, 4, line);
      ExpectRegs(inst, {0, 1, 2, 3}, line);
      if (inst.RegAt(0) == inst.RegAt(1)) {
        Fail(line, "RdLo and RdHi must be distinct");
      }
      break;
    case Mnemonic::kLsl:
    case Mnemonic::kLsr:
    case Mnemonic::kAsr:
    case Mnemonic::kRor:
      if (ops.size() == 2) ops.insert(ops.begin() + 1, ops[0]);
      ExpectCount(inst, 3, line);
      ExpectRegs(inst, {0, 1}, line);
      if (auto* imm = std::get_if<Immediate>(&ops[2])) {
        ShiftKind k = ShiftKind::kLsl;
        if (inst.mnemonic == Mnemonic::kLsr) k = ShiftKind::kLsr;
        if (inst.mnemonic == Mnemonic::kAsr) k = ShiftKind::kAsr;
        if (inst.mnemonic == Mnemonic::kRor) k = ShiftKind::kRor;
        CheckShiftAmount(k, imm->value, line);
      } else {
        ExpectRegs(inst, {2}, line);
      }
      break;
    case Mnemonic::kRrx:
      ExpectCount(inst, 2, line);
      ExpectRegs(inst, {0, 1}, line);
      break;
    case Mnemonic::kLdr:
    case Mnemonic::kLdrb:
    case Mnemonic::kLdrh:
    case Mnemonic::kStr:
    case Mnemonic::kStrb:
    case Mnemonic::kStrh: {
      ExpectCount(inst, 2, line);
      ExpectRegs(inst, {0}, line);
      auto* mem = std::get_if<MemRef>(&ops[1]);
      if (!mem) Fail(line, "expected memory operand");
      if (mem->mode != IndexMode::kOffset && inst.RegAt(0) == mem->base) {
        Fail(line, "writeback base register equals transfer register");
      }
      break;
    }
    case Mnemonic::kLdmia:
    case Mnemonic::kLdmdb:
    case Mnemonic::kStmia:
    case Mnemonic::kStmdb: {
      ExpectCount(inst, 2, line);
      if (!std::holds_alternative<RegOperand>(ops[0])) {
        Fail(line, "expected base register");
      }
      auto* list = std::get_if<RegisterList>(&ops[1]);
      if (!list) Fail(line, "expected register list");
      const auto& base = std::get<RegOperand>(ops[0]);
      const bool load = inst.mnemonic == Mnemonic::kLdmia ||
                        inst.mnemonic == Mnemonic::kLdmdb;
      if (base.writeback && load && list->regs.Contains(base.reg)) {
        Fail(line, "writeback base register in load list");
      }
      if (list->regs.Contains(Reg::kSp)) Fail(line, "sp in register list");
      break;
    }
    case Mnemonic::kPush:
    case Mnemonic::kPop: {
      ExpectCount(inst, 1, line);
      auto* list = std::get_if<RegisterList>(&ops[0]);
      if (!list) Fail(line, "expected register list");
      if (list->regs.Contains(Reg::kSp)) Fail(line, "sp in register list");
      if (inst.mnemonic == Mnemonic::kPush && list->regs.Contains(Reg::kPc)) {
        Fail(line, "pc in push list");
      }
      break;
    }
    case Mnemonic::kAdr:
      ExpectCount(inst, 2, line);
      ExpectRegs(inst, {0}, line);
      if (!std::holds_alternative<LabelRef>(ops[1])) {
        Fail(line, "expected label");
      }
      break;
    case Mnemonic::kB:
    case Mnemonic::kBl:
      ExpectCount(inst, 1, line);
      if (!std::holds_alternative<LabelRef>(ops[0])) {
        Fail(line, "expected label");
      }
      break;
    case Mnemonic::kBx:
      ExpectCount(inst, 1, line);
      ExpectRegs(inst, {0}, line);
      break;
    case Mnemonic::kMrs:
      ExpectCount(inst, 2, line);
      ExpectRegs(inst, {0}, line);
      if (!std::holds_alternative<SpecialReg>(ops[1])) {
        Fail(line, "expected apsr");
      }
      break;
    case Mnemonic::kMsr:
      ExpectCount(inst, 2, line);
      if (!std::holds_alternative<SpecialReg>(ops[0])) {
        Fail(line, "expected apsr");
      }
      ExpectRegs(inst, {1}, line);
      break;
    case Mnemonic::kNop:
      ExpectCount(inst, 0, line);
      break;
    case Mnemonic::kIt:
      break;  // handled by the caller
  }
}

bool IsBranch(Mnemonic m) {
  return m == Mnemonic::kB || m == Mnemonic::kBl || m == Mnemonic::kBx;
}

Instruction ParseStatement(std::string_view text, int line) {
  text = Trim(text);
  size_t split = 0;
  while (split < text.size() &&
         !std::isspace(static_cast<unsigned char>(text[split]))) {
    ++split;
  }
  ParsedMnemonic pm = ParseMnemonic(text.substr(0, split), line);
  std::string_view rest = Trim(text.substr(split));

  Instruction inst;
  inst.mnemonic = pm.mnemonic;
  inst.cond = pm.cond;
  inst.sets_flags = pm.sets_flags;
  inst.qualifier = pm.qualifier;
  inst.line = line;

  if (pm.mnemonic == Mnemonic::kIt) {
    auto cond = ParseCond(rest);
    if (!cond) Fail(line, "it expects a condition code");
    if (*cond == Cond::kAl && pm.it_mask->find('e') != std::string::npos) {
      Fail(line, "it al cannot have else slots");
    }
    inst.it = ItSpec{*cond, *pm.it_mask};
    return inst;
  }
  inst.operands = rest.empty() ? std::vector<Operand>{}
                               : ParseOperands(rest, line);
  ValidateOperands(inst, line);
  return inst;
}

struct Annotation {
  bool is_clobbers;
  RegAndFlags set;
};

// Recognizes `clobbers(...)` / `exit-live(...)` inside a comment.
std::optional<Annotation> ParseAnnotation(std::string_view comment, int line) {
  comment = Trim(comment);
  while (!comment.empty() && (comment[0] == '@' || comment[0] == ';')) {
    comment = Trim(comment.substr(1));
  }
  bool clobbers;
  std::string_view body;
  if (comment.substr(0, 8) == "clobbers") {
    clobbers = true;
    body = Trim(comment.substr(8));
  } else if (comment.substr(0, 9) == "exit-live") {
    clobbers = false;
    body = Trim(comment.substr(9));
  } else {
    return std::nullopt;
  }
  if (body.size() < 2 || body.front() != '(') return std::nullopt;
  const size_t close = body.find(')');
  if (close == std::string_view::npos) Fail(line, "unterminated annotation");
  Annotation a{clobbers, {}};
  std::string_view inner = Trim(body.substr(1, close - 1));
  if (inner.empty()) return a;
  for (std::string_view part : SplitOperands(inner, line)) {
    if (Lower(part) == "flags") {
      a.set.flags = true;
    } else {
      a.set.regs.Insert(ExpectReg(part, line));
    }
  }
  return a;
}

void Attach(Instruction& inst, const Annotation& a, int line) {
  if (a.is_clobbers) {
    if (inst.mnemonic != Mnemonic::kBl) {
      Fail(line, "@clobbers must follow a bl instruction");
    }
    inst.clobbers = a.set;
  } else {
    if (inst.mnemonic != Mnemonic::kBx) {
      Fail(line, "@exit-live must follow a bx instruction");
    }
    inst.exit_live = a.set;
  }
}

// Enforces the it-block structure: slot conditions, no labels or nested it
// (except the duplicated-it construct), branches only in the last slot.
void CheckItStructure(const Program& program) {
  std::deque<Cond> pending;
  bool previous_was_it = false;
  for (const Item& item : program.items) {
    if (auto* label = std::get_if<Label>(&item)) {
      if (!pending.empty()) Fail(label->line, "label inside it block");
      previous_was_it = false;
      continue;
    }
    if (auto* dir = std::get_if<Directive>(&item)) {
      if (!pending.empty()) Fail(dir->line, "directive inside it block");
      continue;
    }
    const auto& inst = std::get<Instruction>(item);
    if (inst.mnemonic == Mnemonic::kIt) {
      if (pending.empty()) {
        for (int s = 0; s < inst.it->SlotCount(); ++s) {
          pending.push_back(inst.it->SlotCond(s));
        }
      } else {
        // Duplicated it: occupies the first slot of the enclosing block and
        // must describe exactly the remaining slots.
        if (!previous_was_it ||
            inst.it->SlotCount() != static_cast<int>(pending.size()) - 1) {
          Fail(inst.line, "it instruction inside it block");
        }
        for (int s = 0; s < inst.it->SlotCount(); ++s) {
          if (inst.it->SlotCond(s) != pending[s + 1]) {
            Fail(inst.line, "duplicated it does not match enclosing block");
          }
        }
        pending.pop_front();
      }
      previous_was_it = true;
      continue;
    }
    previous_was_it = false;
    if (!pending.empty()) {
      if (inst.cond != pending.front()) {
        Fail(inst.line, "instruction condition does not match it block slot");
      }
      pending.pop_front();
      if (IsBranch(inst.mnemonic) && !pending.empty()) {
        Fail(inst.line, "branch must be the last instruction of an it block");
      }
    } else if (inst.cond != Cond::kAl && inst.mnemonic != Mnemonic::kB) {
      Fail(inst.line, "conditional instruction outside it block");
    }
  }
  if (!pending.empty()) Fail(0, "unterminated it block at end of input");
}

std::string EmitRegList(RegSet regs) {
  std::string out = "{";
  bool first = true;
  for (Reg r : regs.ToVector()) {
    if (!first) out += ", ";
    out += RegName(r);
    first = false;
  }
  return out + "}";
}

std::string EmitOperand(const Operand& op) {
  struct Visitor {
    std::string operator()(const RegOperand& r) const {
      return std::string(RegName(r.reg)) + (r.writeback ? "!" : "");
    }
    std::string operator()(const Immediate& i) const {
      return "#" + std::to_string(i.value);
    }
    std::string operator()(const ShiftedRegister& s) const {
      std::string out = std::string(RegName(s.reg)) + ", " +
                        std::string(ShiftName(s.kind));
      if (s.kind != ShiftKind::kRrx) out += " #" + std::to_string(s.amount);
      return out;
    }
    std::string operator()(const MemRef& m) const {
      std::string out = "[" + std::string(RegName(m.base));
      if (m.mode == IndexMode::kPostIndexed) {
        return out + "], #" + std::to_string(*m.imm);
      }
      if (m.imm) out += ", #" + std::to_string(*m.imm);
      if (m.index) {
        out += ", " + std::string(RegName(*m.index));
        if (m.index_lsl) out += ", lsl #" + std::to_string(m.index_lsl);
      }
      out += "]";
      if (m.mode == IndexMode::kPreIndexed) out += "!";
      return out;
    }
    std::string operator()(const RegisterList& l) const {
      return EmitRegList(l.regs);
    }
    std::string operator()(const LabelRef& l) const { return l.name; }
    std::string operator()(const SpecialReg& s) const {
      return std::string(PsrName(s.psr));
    }
  };
  return std::visit(Visitor{}, op);
}

std::string EmitAnnotation(std::string_view name, const RegAndFlags& set) {
  std::string out = " @" + std::string(name) + "(";
  bool first = true;
  for (Reg r : set.regs.ToVector()) {
    if (!first) out += ", ";
    out += RegName(r);
    first = false;
  }
  if (set.flags) out += first ? "flags" : ", flags";
  return out + ")";
}

}  // namespace

std::string_view MnemonicName(Mnemonic m) {
  switch (m) {
    case Mnemonic::kAdc: return "adc";
    case Mnemonic::kAdd: return "add";
    case Mnemonic::kAdr: return "adr";
    case Mnemonic::kAnd: return "and";
    case Mnemonic::kAsr: return "asr";
    case Mnemonic::kB: return "b";
    case Mnemonic::kBic: return "bic";
    case Mnemonic::kBl: return "bl";
    case Mnemonic::kBx: return "bx";
    case Mnemonic::kCmn: return "cmn";
    case Mnemonic::kCmp: return "cmp";
    case Mnemonic::kEor: return "eor";
    case Mnemonic::kIt: return "it";
    case Mnemonic::kLdmdb: return "ldmdb";
    case Mnemonic::kLdmia: return "ldmia";
    case Mnemonic::kLdr: return "ldr";
    case Mnemonic::kLdrb: return "ldrb";
    case Mnemonic::kLdrh: return "ldrh";
    case Mnemonic::kLsl: return "lsl";
    case Mnemonic::kLsr: return "lsr";
    case Mnemonic::kMov: return "mov";
    case Mnemonic::kMrs: return "mrs";
    case Mnemonic::kMsr: return "msr";
    case Mnemonic::kMul: return "mul";
    case Mnemonic::kMvn: return "mvn";
    case Mnemonic::kNop: return "nop";
    case Mnemonic::kOrr: return "orr";
    case Mnemonic::kPop: return "pop";
    case Mnemonic::kPush: return "push";
    case Mnemonic::kRor: return "ror";
    case Mnemonic::kRrx: return "rrx";
    case Mnemonic::kRsb: return "rsb";
    case Mnemonic::kSbc: return "sbc";
    case Mnemonic::kStmdb: return "stmdb";
    case Mnemonic::kStmia: return "stmia";
    case Mnemonic::kStr: return "str";
    case Mnemonic::kStrb: return "strb";
    case Mnemonic::kStrh: return "strh";
    case Mnemonic::kSub: return "sub";
    case Mnemonic::kTeq: return "teq";
    case Mnemonic::kTst: return "tst";
    case Mnemonic::kUmlal: return "umlal";
    case Mnemonic::kUmull: return "umull";
  }
  return "?";
}

std::string_view ShiftName(ShiftKind k) {
  switch (k) {
    case ShiftKind::kLsl: return "lsl";
    case ShiftKind::kLsr: return "lsr";
    case ShiftKind::kAsr: return "asr";
    case ShiftKind::kRor: return "ror";
    case ShiftKind::kRrx: return "rrx";
  }
  return "?";
}

std::string_view PsrName(Psr p) {
  switch (p) {
    case Psr::kApsr: return "apsr";
    case Psr::kApsrNzcvq: return "apsr_nzcvq";
    case Psr::kApsrNzcv: return "apsr_nzcv";
  }
  return "?";
}

Cond ItSpec::SlotCond(int slot) const {
  if (slot == 0) return first;
  return mask[slot - 1] == 't' ? first : Invert(first);
}

bool Instruction::operator==(const Instruction& o) const {
  return mnemonic == o.mnemonic && cond == o.cond &&
         sets_flags == o.sets_flags && operands == o.operands && it == o.it &&
         qualifier == o.qualifier && clobbers == o.clobbers &&
         exit_live == o.exit_live;
}

const std::string* Instruction::Target() const {
  for (const Operand& op : operands) {
    if (auto* l = std::get_if<LabelRef>(&op)) return &l->name;
  }
  return nullptr;
}

std::set<std::string> Program::Externals() const {
  std::set<std::string> out;
  for (const Item& item : items) {
    auto* d = std::get_if<Directive>(&item);
    if (!d) continue;
    std::istringstream in(d->text);
    std::string keyword;
    in >> keyword;
    if (Lower(keyword) != ".extern") continue;
    std::string name;
    while (std::getline(in, name, ',')) {
      std::string_view n = Trim(name);
      if (!n.empty()) out.emplace(n);
    }
  }
  return out;
}

std::vector<const Instruction*> Program::Instructions() const {
  std::vector<const Instruction*> out;
  for (const Item& item : items) {
    if (auto* inst = std::get_if<Instruction>(&item)) out.push_back(inst);
  }
  return out;
}

size_t Program::InstructionCount() const {
  return static_cast<size_t>(
      std::count_if(items.begin(), items.end(), [](const Item& item) {
        return std::holds_alternative<Instruction>(item);
      }));
}

SupportLevel LookupSupport(std::string_view base_mnemonic) {
  const std::string t = Lower(base_mnemonic);
  if (t == "it") return SupportLevel::kSupported;
  for (const MnemonicInfo& info : MnemonicTable()) {
    if (info.spelling == t) return SupportLevel::kSupported;
  }
  for (std::string_view r : kRejectedSpecific) {
    if (r == t) return SupportLevel::kRejectedSpecific;
  }
  return SupportLevel::kUnknown;
}

Program ParseProgram(std::string_view text) {
  Program program;
  std::set<std::string> labels;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::optional<Annotation> annotation;
    if (size_t c = line.find_first_of(";@"); c != std::string_view::npos) {
      annotation = ParseAnnotation(line.substr(c), line_no);
      line = line.substr(0, c);
    }
    line = Trim(line);

    // Leading `name:` label.
    if (!line.empty() && IsIdentStart(line[0])) {
      size_t i = 1;
      while (i < line.size() && IsIdentChar(line[i])) ++i;
      size_t j = i;
      while (j < line.size() &&
             std::isspace(static_cast<unsigned char>(line[j]))) {
        ++j;
      }
      if (j < line.size() && line[j] == ':') {
        std::string name(line.substr(0, i));
        if (!labels.insert(name).second) {
          Fail(line_no, "duplicate label '" + name + "'");
        }
        program.items.push_back(Label{name, line_no});
        line = Trim(line.substr(j + 1));
      }
    }

    if (!line.empty()) {
      if (line[0] == '.') {
        program.items.push_back(Directive{std::string(line), line_no});
      } else {
        program.items.push_back(ParseStatement(line, line_no));
      }
    }

    if (annotation) {
      if (program.items.empty() ||
          !std::holds_alternative<Instruction>(program.items.back())) {
        Fail(line_no, "annotation does not follow an instruction");
      }
      Attach(std::get<Instruction>(program.items.back()), *annotation,
             line_no);
    }
    if (end == text.size()) break;
  }
  CheckItStructure(program);
  return program;
}

Instruction ParseInstruction(std::string_view text) {
  return ParseStatement(text, 1);
}

Sequence ParseSequence(std::string_view text) {
  return ParseProgram(text).items;
}

std::string EmitInstruction(const Instruction& inst) {
  std::string out(MnemonicName(inst.mnemonic));
  if (inst.mnemonic == Mnemonic::kIt) {
    return out + inst.it->mask + " " + std::string(CondName(inst.it->first));
  }
  if (inst.sets_flags) out += "s";
  if (inst.cond != Cond::kAl) out += CondName(inst.cond);
  if (inst.qualifier == WidthQualifier::kWide) out += ".w";
  if (inst.qualifier == WidthQualifier::kNarrow) out += ".n";
  for (size_t k = 0; k < inst.operands.size(); ++k) {
    out += k == 0 ? " " : ", ";
    out += EmitOperand(inst.operands[k]);
  }
  if (inst.clobbers) out += EmitAnnotation("clobbers", *inst.clobbers);
  if (inst.exit_live) out += EmitAnnotation("exit-live", *inst.exit_live);
  return out;
}

std::string EmitItems(std::span<const Item> items) {
  std::string out;
  for (const Item& item : items) {
    if (auto* label = std::get_if<Label>(&item)) {
      out += label->name + ":\n";
    } else if (auto* dir = std::get_if<Directive>(&item)) {
      out += dir->text + "\n";
    } else {
      out += EmitInstruction(std::get<Instruction>(item)) + "\n";
    }
  }
  return out;
}

std::string EmitProgram(const Program& program) {
  return EmitItems(program.items);
}

}  // namespace skipshield
