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

#include "skipshield/campaign.h"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <thread>

#include "json.hpp"

namespace skipshield {
namespace {

using nlohmann::json;

[[noreturn]] void ConfigError(const std::string& message) {
  throw Error(ErrorCode::kConfig, message);
}

uint32_t Number(const json& j, const std::string& what) {
  if (j.is_number_unsigned()) {
    const uint64_t v = j.get<uint64_t>();
    if (v > 0xffffffffu) ConfigError(what + ": value out of range");
    return static_cast<uint32_t>(v);
  }
  if (j.is_number_integer()) {
    const int64_t v = j.get<int64_t>();
    if (v < INT32_MIN || v > 0xffffffffLL) {
      ConfigError(what + ": value out of range");
    }
    return static_cast<uint32_t>(v);
  }
  if (j.is_string()) {
    std::string_view text = j.get_ref<const std::string&>();
    int base = 10;
    if (text.starts_with("0x") || text.starts_with("0X")) {
      text.remove_prefix(2);
      base = 16;
    }
    uint64_t v = 0;
    auto [end, ec] =
        std::from_chars(text.data(), text.data() + text.size(), v, base);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty() ||
        v > 0xffffffffu) {
      ConfigError(what + ": bad number '" + j.get<std::string>() + "'");
    }
    return static_cast<uint32_t>(v);
  }
  ConfigError(what + ": expected a number");
}

Reg RegisterName(const std::string& name) {
  auto reg = ParseReg(name);
  if (!reg) ConfigError("unknown register '" + name + "'");
  return *reg;
}

std::vector<uint8_t> HexBytes(const std::string& hex) {
  std::string digits;
  for (char c : hex) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '_') continue;
    digits += c;
  }
  if (digits.size() % 2 != 0) ConfigError("memory hex has an odd length");
  std::vector<uint8_t> bytes(digits.size() / 2);
  for (size_t i = 0; i < bytes.size(); ++i) {
    auto [end, ec] = std::from_chars(digits.data() + 2 * i,
                                     digits.data() + 2 * i + 2, bytes[i], 16);
    if (ec != std::errc() || end != digits.data() + 2 * i + 2) {
      ConfigError("memory hex is not hexadecimal");
    }
  }
  return bytes;
}

bool Covered(const std::vector<MemoryImage>& memory, MemoryRange r) {
  for (const auto& m : memory) {
    if (r.base >= m.base &&
        static_cast<uint64_t>(r.base) + r.size <=
            static_cast<uint64_t>(m.base) + m.size) {
      return true;
    }
  }
  return false;
}

std::string Hex(uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

std::string ExitText(const Exit& e) {
  switch (e.kind) {
    case ExitKind::kRunning: return "running";
    case ExitKind::kFallthrough: return "fallthrough";
    case ExitKind::kLabel: return "label #" + std::to_string(e.id);
    case ExitKind::kAddress: return "return to " + Hex(e.id);
    case ExitKind::kBadReturn: return "bad return to " + Hex(e.id);
  }
  return "?";
}

MachineState InitialState(const CampaignConfig& config, int entry) {
  ConcreteMemory memory;
  for (const auto& m : config.memory) memory.AddRegion(m.base, m.bytes);
  MachineState s = MakeState(std::move(memory));
  s.regs[Index(Reg::kLr)] = kCampaignReturnAddress;
  for (const auto& [reg, value] : config.regs) s.regs[Index(reg)] = value;
  s.pc = entry;
  return s;
}

}  // namespace

std::string_view OutcomeName(Outcome o) {
  switch (o) {
    case Outcome::kSilent: return "silent";
    case Outcome::kCorrupted: return "corrupted";
    case Outcome::kCrashed: return "crashed";
  }
  return "?";
}

CampaignConfig ParseCampaignConfig(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    ConfigError(std::string("campaign config: ") + e.what());
  }
  if (!j.is_object()) ConfigError("campaign config must be an object");
  CampaignConfig config;
  try {
    if (!j.contains("entry") || !j["entry"].is_string()) {
      ConfigError("campaign config needs an entry label");
    }
    config.entry = j["entry"].get<std::string>();
    if (j.contains("regs")) {
      for (const auto& [name, value] : j["regs"].items()) {
        const Reg reg = RegisterName(name);
        if (reg == Reg::kPc) ConfigError("pc cannot be initialized");
        config.regs[reg] = Number(value, name);
      }
    }
    if (j.contains("memory")) {
      for (const auto& m : j["memory"]) {
        MemoryImage image;
        image.base = Number(m.at("base"), "memory base");
        std::vector<uint8_t> bytes;
        if (m.contains("hex")) bytes = HexBytes(m["hex"].get<std::string>());
        image.size = m.contains("size")
                         ? Number(m["size"], "memory size")
                         : static_cast<uint32_t>(bytes.size());
        if (bytes.size() > image.size) {
          ConfigError("memory hex is longer than the region");
        }
        if (static_cast<uint64_t>(image.base) + image.size > 0x100000000ull) {
          ConfigError("memory region wraps around");
        }
        bytes.resize(image.size, 0);
        image.bytes = std::move(bytes);
        config.memory.push_back(std::move(image));
      }
    }
    if (j.contains("observables")) {
      const json& obs = j["observables"];
      if (obs.contains("regs")) {
        for (const auto& name : obs["regs"]) {
          config.observable_regs.push_back(
              RegisterName(name.get<std::string>()));
        }
      }
      if (obs.contains("mem")) {
        for (const auto& m : obs["mem"]) {
          config.observable_mem.push_back(
              {Number(m.at("base"), "observable base"),
               Number(m.at("size"), "observable size")});
        }
      }
    }
    if (j.contains("bound")) config.bound = Number(j["bound"], "bound");
    if (j.contains("max_sites")) {
      config.max_sites = Number(j["max_sites"], "max_sites");
    }
    if (j.contains("threads")) {
      config.threads = static_cast<int>(Number(j["threads"], "threads"));
    }
  } catch (const json::exception& e) {
    ConfigError(std::string("campaign config: ") + e.what());
  }
  return config;
}

SiteResult DiffObservables(const MachineState& reference,
                           const MachineState& test, RunStatus status,
                           const CampaignConfig& config) {
  SiteResult result;
  if (status != RunStatus::kFinished) {
    result.outcome = Outcome::kCrashed;
    result.detail = std::string(RunStatusName(status));
    return result;
  }
  result.outcome = Outcome::kCorrupted;
  if (test.exit != reference.exit) {
    result.detail = "exit: " + ExitText(test.exit);
    return result;
  }
  for (Reg reg : config.observable_regs) {
    const uint32_t a = reference.regs[Index(reg)];
    const uint32_t b = test.regs[Index(reg)];
    if (a != b) {
      result.detail =
          std::string(RegName(reg)) + ": " + Hex(a) + " != " + Hex(b);
      return result;
    }
  }
  const auto& ref_mem = std::get<ConcreteMemory>(reference.memory);
  const auto& test_mem = std::get<ConcreteMemory>(test.memory);
  for (const auto& range : config.observable_mem) {
    for (uint32_t i = 0; i < range.size; ++i) {
      const auto a = ref_mem.Read(range.base + i, 1);
      const auto b = test_mem.Read(range.base + i, 1);
      if (a != b) {
        result.detail = "mem[" + Hex(range.base + i) + "]: " +
                        Hex(a.value_or(0)) + " != " + Hex(b.value_or(0));
        return result;
      }
    }
  }
  result.outcome = Outcome::kSilent;
  return result;
}

CampaignReport RunCampaign(const Program& program,
                           const CampaignConfig& config) {
  const ExecContext ctx =
      ExecContext::ForProgram(program, 32, kCampaignCodeBase);
  CampaignReport report;
  const int entry = ctx.size() == 0 && config.entry.empty()
                        ? 0
                        : ctx.LabelIndex(config.entry);
  if (entry < 0) ConfigError("entry label '" + config.entry + "' not found");
  for (const auto& range : config.observable_mem) {
    if (!Covered(config.memory, range)) {
      ConfigError("observable range at " + Hex(range.base) +
                  " is outside the declared memory");
    }
  }
  for (const Op& op : ctx.ops()) {
    if (op.m == Mnemonic::kBl && op.target != Op::Target::kInternal) {
      throw Error(ErrorCode::kConfig,
                  "call to a label outside the program cannot be simulated",
                  op.line);
    }
  }

  const MachineState s0 = InitialState(config, entry);
  RunOptions base_options;
  base_options.step_bound = config.bound;
  MachineState reference = s0;
  const RunStatus status = Run(ctx, reference, base_options);
  if (status != RunStatus::kFinished) {
    throw Error(ErrorCode::kReferenceRunFailed,
                "fault-free run ended with " +
                    std::string(RunStatusName(status)));
  }
  report.reference_steps = reference.executed;
  report.total_sites = config.max_sites == 0
                           ? reference.executed
                           : std::min(reference.executed, config.max_sites);
  report.capped = report.total_sites < report.reference_steps;
  report.sites.resize(report.total_sites);

  auto run_site = [&](uint64_t site) {
    MachineState s = s0;
    RunOptions options = base_options;
    options.skip_dynamic = static_cast<int64_t>(site);
    // The skipped instruction is the one reached at this dynamic index.
    int line = 0;
    // The prefix matches the reference run, which finished.
    while (!s.Done() && (s.executed < site || s.in_function)) {
      StepInPlace(ctx, s, options);
    }
    if (!s.Done() && !s.in_function && s.pc < static_cast<int>(ctx.size())) {
      line = ctx.ops()[s.pc].line;
    }
    const RunStatus st = Run(ctx, s, options);
    SiteResult r = DiffObservables(reference, s, st, config);
    r.site = site;
    r.line = line;
    report.sites[site] = std::move(r);
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1 || report.total_sites < 2) {
    for (uint64_t k = 0; k < report.total_sites; ++k) run_site(k);
  } else {
    std::vector<std::thread> workers;
    const uint64_t chunk = (report.total_sites + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const uint64_t lo = t * chunk;
      const uint64_t hi = std::min(report.total_sites, lo + chunk);
      if (lo >= hi) break;
      workers.emplace_back([&, lo, hi] {
        for (uint64_t k = lo; k < hi; ++k) run_site(k);
      });
    }
    for (auto& w : workers) w.join();
  }

  for (const auto& site : report.sites) {
    switch (site.outcome) {
      case Outcome::kSilent: ++report.silent; break;
      case Outcome::kCorrupted: ++report.corrupted; break;
      case Outcome::kCrashed: ++report.crashed; break;
    }
  }
  report.tolerant = report.corrupted == 0 && report.crashed == 0;
  return report;
}

std::string CampaignReportToJson(const CampaignReport& report) {
  json j;
  j["reference_steps"] = report.reference_steps;
  j["total_sites"] = report.total_sites;
  j["capped"] = report.capped;
  j["summary"] = {{"silent", report.silent},
                  {"corrupted", report.corrupted},
                  {"crashed", report.crashed}};
  j["tolerant"] = report.tolerant;
  json sites = json::array();
  for (const auto& s : report.sites) {
    json site = {{"site", s.site},
                 {"line", s.line},
                 {"outcome", std::string(OutcomeName(s.outcome))}};
    if (!s.detail.empty()) site["detail"] = s.detail;
    sites.push_back(std::move(site));
  }
  j["sites"] = std::move(sites);
  return j.dump(2);
}

}  // namespace skipshield
