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
// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "skipshield/campaign.h"
#include "skipshield/harden.h"
#include "skipshield/report.h"
#include "skipshield/verifier.h"
#include "tests/oracle/brute_force.h"

namespace skipshield {
namespace {

constexpr double kPerEntrySeconds = 10.0;
constexpr double kCampaignSeconds = 60.0;

int failures = 0;

void Report(int n, bool ok, const std::string& what,
            const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", n,
              what.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

double Since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string Fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string ReadSample(const std::string& name) {
  std::ifstream in(std::string(SKIPSHIELD_SOURCE_DIR) + "/samples/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<CatalogResult> CatalogAt(int width) {
  VerifyOptions options;
  options.width = width;
  if (width > 4) {
    // Entries above 2^22 initial states are sampled.
    options.max_log2_states = 22;
    options.sample_states = uint64_t{1} << 19;
  }
  return VerifyCatalog(options);
}

void CatalogProof(const std::vector<CatalogResult>& w4) {
  bool ok = w4.size() >= 12;
  std::string slowest_name, unexpected;
  double slowest = 0;
  int passed = 0;
  for (const CatalogResult& r : w4) {
    const bool as_expected = r.error.empty() && r.verdict.exhaustive &&
                             r.verdict.passed == r.expect_pass;
    ok &= as_expected && r.verdict.seconds <= kPerEntrySeconds;
    if (!as_expected) unexpected += " " + r.name;
    passed += r.verdict.passed;
    if (r.verdict.seconds > slowest) {
      slowest = r.verdict.seconds;
      slowest_name = r.name;
    }
  }
  std::string detail = std::to_string(passed) + "/" +
                       std::to_string(w4.size()) +
                       " proven, the rest expected failures; slowest " +
                       slowest_name + " " + Fixed(slowest) + "s";
  if (!unexpected.empty()) detail += "; unexpected:" + unexpected;
  Report(1, ok, "catalog proof at width 4", detail);
}

void AdcsFailure(const std::vector<CatalogResult>& w4) {
  const CatalogResult* strict = nullptr;
  const CatalogResult* relaxed = nullptr;
  for (const CatalogResult& r : w4) {
    if (r.name == "adcs-strict") strict = &r;
    if (r.name == "adcs-relaxed") relaxed = &r;
  }
  if (!strict || !relaxed) {
    Report(2, false, "adcs strict fails, relaxed passes", "entries missing");
    return;
  }
  int last = -1;
  for (const CatalogEntry& e : BuiltinCatalog()) {
    if (e.name != "adcs-strict") continue;
    for (const Item& item : e.replacement) {
      last += std::holds_alternative<Instruction>(item);
    }
  }
  const auto& cx = strict->verdict.counterexample;
  const bool ok = !strict->verdict.passed && cx && cx->skip == last &&
                  strict->verdict.property_failed == Property::kP3 &&
                  relaxed->verdict.passed;
  std::string detail = "strict ";
  detail += strict->verdict.passed ? "passed" : "failed";
  if (cx) {
    detail += " at skip " + std::to_string(cx->skip.value_or(-1)) + " of 0.." +
              std::to_string(last) + " on " + cx->mismatch.observable;
  }
  detail += ", relaxed ";
  detail += relaxed->verdict.passed ? "passed" : "failed";
  Report(2, ok, "adcs strict fails at the final adcs, relaxed passes",
         detail);
}

void WidthIndependence(const std::vector<CatalogResult>& w4) {
  const std::vector<CatalogResult> w2 = CatalogAt(2);
  const std::vector<CatalogResult> w8 = CatalogAt(8);
  int divergences = 0, sampled = 0;
  std::string names;
  bool ok = w2.size() == w4.size() && w8.size() == w4.size();
  for (size_t k = 0; ok && k < w4.size(); ++k) {
    const bool a = w2[k].error.empty() && w2[k].verdict.passed;
    const bool b = w4[k].error.empty() && w4[k].verdict.passed;
    const bool c = w8[k].error.empty() && w8[k].verdict.passed;
    sampled += !w8[k].verdict.exhaustive;
    if (a != b || b != c) {
      ++divergences;
      names += " " + w4[k].name;
    }
  }
  ok &= divergences == 0;
  Report(3, ok, "verdicts identical at widths 2, 4 and 8",
         std::to_string(divergences) + " divergences" + names + "; " +
             std::to_string(sampled) + " width-8 entries sampled");
}

void OracleAgreement() {
  const auto t0 = std::chrono::steady_clock::now();
  int divergences = 0;
  int entries = 0;
  std::string names;
  VerifyOptions options;
  for (const CatalogEntry& e : BuiltinCatalog()) {
    ++entries;
    const Verdict v =
        CheckEquivalence(e.original, e.replacement, e.spec, options);
    const oracle::OracleResult o =
        oracle::BruteForceCheck(e.original, e.replacement, e.spec, 4);
    if (v.passed != o.passed) {
      ++divergences;
      names += " " + e.name;
    }
  }
  Report(4, divergences == 0, "brute-force oracle agrees at width 4",
         std::to_string(entries) + " entries, " + std::to_string(divergences) +
             " divergences" + names + ", " + Fixed(Since(t0), 1) + "s");
}

void Campaign() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Program p = ParseProgram(ReadSample("aes_round.s"));
    const CampaignConfig config =
        ParseCampaignConfig(ReadSample("campaign.json"));
    std::map<Mnemonic, int> seen;
    bool cond = false;
    for (const Instruction* i : p.Instructions()) {
      ++seen[i->mnemonic];
      cond |= i->mnemonic == Mnemonic::kB && i->cond != Cond::kAl;
    }
    const bool shape = p.InstructionCount() >= 40 &&
                       (seen[Mnemonic::kLdr] + seen[Mnemonic::kLdrb]) > 0 &&
                       (seen[Mnemonic::kStr] + seen[Mnemonic::kStrb]) > 0 &&
                       cond && seen[Mnemonic::kPush] && seen[Mnemonic::kPop] &&
                       seen[Mnemonic::kBl];
    const CampaignReport before = RunCampaign(p, config);
    const CampaignReport after = RunCampaign(HardenProgram(p, {}), config);
    const double seconds = Since(t0);
    const bool ok = shape && before.corrupted >= 1 && after.corrupted == 0 &&
                    after.crashed == 0 && !after.capped &&
                    after.total_sites == after.reference_steps &&
                    seconds <= kCampaignSeconds;
    Report(5, ok, "end-to-end campaign on the AES round kernel",
           std::to_string(p.InstructionCount()) + " instructions; unhardened " +
               std::to_string(before.total_sites) + " sites, " +
               std::to_string(before.corrupted) + " corrupted, " +
               std::to_string(before.crashed) + " crashed; hardened " +
               std::to_string(after.total_sites) + " sites, " +
               std::to_string(after.corrupted) + " corrupted, " +
               std::to_string(after.crashed) + " crashed; " +
               Fixed(seconds, 1) + "s");
  } catch (const Error& e) {
    Report(5, false, "end-to-end campaign on the AES round kernel", e.what());
  }
}

int LengthOf(const std::string& text, bool flags_live) {
  HardeningPolicy policy;
  policy.liveness.exit_live =
      RegAndFlags{RegSet{Reg::kR0, Reg::kR1, Reg::kSp, Reg::kLr}, flags_live};
  HardeningReport report;
  HardenProgram(ParseProgram(text), policy, &report);
  return report.records.empty() ? -1 : report.records[0].replacement_length;
}

void Lengths() {
  struct Want {
    const char* recipe;
    const char* text;
    bool flags_live;
    int length;
  };
  const Want kWant[] = {
      {"idempotent", "add r3, r1, r2\n", true, 2},
      {"overlap", "add r1, r1, r3\n", true, 4},
      {"stack", "push {r1, r2, r3, lr}\n", true, 6},
      {"umlal", "umlal r0, r1, r2, r3\n", true, 14},
      {"bl", "bl f\nf:\nnop\n", true, 6},
      {"flags-rw", "adcs r1, r2, r3\n", false, 6},
  };
  bool ok = true;
  std::string detail;
  try {
    for (const Want& w : kWant) {
      const int got = LengthOf(w.text, w.flags_live);
      ok &= got == w.length;
      detail += std::string(w.recipe) + "=" + std::to_string(got) + " ";
    }
    HardeningReport hr;
    const Program p = ParseProgram("add r1, r1, r3\n");
    const Program h = HardenProgram(p, {}, &hr);
    const OverheadReport r = MeasureOverhead(p, h, hr);
    const int64_t bytes =
        r.in_scope.code_bytes.hardened - r.in_scope.code_bytes.original;
    ok &= bytes >= 6 && bytes <= 10;
    detail += "; add r1, r1, r3 byte overhead " + std::to_string(bytes);
  } catch (const Error& e) {
    ok = false;
    detail += e.what();
  }
  Report(6, ok, "replacement lengths 2/4/6/14/6/6 and overlap bytes in [6,10]",
         detail);
}

// Instruction tokens with labels renamed in order of first appearance.
std::vector<std::string> Tokens(const Program& p) {
  std::map<std::string, std::string> names;
  auto rename = [&](const std::string& name) {
    return names.emplace(name, "L" + std::to_string(names.size()))
        .first->second;
  };
  std::vector<std::string> out;
  for (const Item& item : p.items) {
    if (const auto* label = std::get_if<Label>(&item)) {
      out.push_back(rename(label->name) + ":");
    } else if (const auto* inst = std::get_if<Instruction>(&item)) {
      Instruction copy = *inst;
      for (Operand& op : copy.operands) {
        if (auto* ref = std::get_if<LabelRef>(&op)) {
          ref->name = rename(ref->name);
        }
      }
      std::istringstream words(EmitInstruction(copy));
      std::string w;
      while (words >> w) out.push_back(w);
    }
  }
  return out;
}

void Structure() {
  const std::string block =
      "itte ne\n"
      "addne r1, r2, #10\n"
      "eorne r3, r5, r1\n"
      "moveq r3, #10\n";
  // The reference listing writes labels without a colon.
  const std::string reference =
      "b.eq else\nb.eq else\n"
      "add r1, r2, #10\nadd r1, r2, #10\n"
      "eor r3, r5, r1\neor r3, r5, r1\n"
      "b continuation\nb continuation\n"
      "else:\n"
      "mov r3, #10\nmov r3, #10\n"
      "continuation:\n";
  bool ok = true;
  std::string detail;
  try {
    HardeningPolicy policy;
    const Program branch = HardenProgram(ParseProgram(block), policy);
    const bool tokens = Tokens(branch) == Tokens(ParseProgram(reference));
    ok &= tokens;
    detail += tokens ? "branch expansion matches token for token"
                     : "branch expansion differs";

    policy.it_strategy = ItStrategy::kDuplicatedIt;
    const Program dup = HardenProgram(ParseProgram(block), policy);
    std::vector<std::string> its;
    for (const Instruction* i : dup.Instructions()) {
      if (i->mnemonic == Mnemonic::kIt) its.push_back(EmitInstruction(*i));
    }
    const std::vector<std::string> want = {"itttt ne", "ittt ne", "ittee ne",
                                           "itee ne"};
    ok &= its == want;
    detail += "; duplicated-it patterns";
    for (const std::string& s : its) detail += " [" + s + "]";
  } catch (const Error& e) {
    ok = false;
    detail += e.what();
  }
  Report(7, ok, "it-block structure under both strategies", detail);
}

void NonTargets() {
  Report(8, true, "hardware overhead figures declared as non-targets",
         "absolute cycle and byte counts measured on silicon (e.g. 9595 -> "
         "20503 cycles, +113.7%) are context only; `skipshield report` gives "
         "static estimates and criteria 6-7 check structure instead");
}

}  // namespace
}  // namespace skipshield

int main() {
  using namespace skipshield;
  const std::vector<CatalogResult> w4 = CatalogAt(4);
  CatalogProof(w4);
  AdcsFailure(w4);
  WidthIndependence(w4);
  OracleAgreement();
  Campaign();
  Lengths();
  Structure();
  NonTargets();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
